#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "codemap/error.hpp"
#include "codemap/syntax.hpp"
#include "codemap/text_io.hpp"

namespace codemap::syntax {

namespace {

// Well-known SDK types, keyed by namespace. Consulted for namespace imports
// (`using System;`, `import java.util.*;`) and for Java's implicit java.lang.
const std::map<std::string, std::set<std::string>>& sdk_catalog() {
  static const std::map<std::string, std::set<std::string>> catalog{
      {"java.lang",
       {"String", "Object", "System", "Math", "Integer", "Long", "Double", "Float", "Boolean",
        "Character", "Byte", "Short", "Number", "StringBuilder", "CharSequence", "Class",
        "Exception", "RuntimeException", "Error", "IllegalArgumentException",
        "IllegalStateException", "NullPointerException", "IndexOutOfBoundsException",
        "UnsupportedOperationException", "ArithmeticException", "Thread", "Runnable",
        "Iterable", "Comparable", "Override", "Deprecated", "Enum", "Void"}},
      {"java.util",
       {"List", "ArrayList", "LinkedList", "Map", "HashMap", "TreeMap", "LinkedHashMap", "Set",
        "HashSet", "TreeSet", "Collection", "Collections", "Arrays", "Iterator", "Objects",
        "Optional", "Random", "Deque", "ArrayDeque", "Queue", "Stack", "Scanner",
        "NoSuchElementException"}},
      {"java.io",
       {"IOException", "File", "InputStream", "OutputStream", "PrintStream", "Reader",
        "Writer", "BufferedReader", "BufferedWriter", "FileReader", "FileWriter",
        "StringReader", "StringWriter", "PrintWriter", "Serializable", "Closeable"}},
      {"System",
       {"Console", "String", "Object", "Math", "Int16", "Int32", "Int64", "Double", "Single",
        "Boolean", "Char", "Byte", "Decimal", "Exception", "ArgumentException",
        "ArgumentNullException", "ArgumentOutOfRangeException", "InvalidOperationException",
        "NullReferenceException", "IndexOutOfRangeException", "NotSupportedException",
        "NotImplementedException", "ArithmeticException", "Array", "DateTime", "TimeSpan",
        "Convert", "Environment", "Random", "Type", "Attribute", "IDisposable",
        "IComparable", "IEquatable", "Func", "Action", "Nullable", "StringComparison",
        "ObsoleteAttribute", "Serializable", "Enum", "Guid"}},
      {"System.Collections.Generic",
       {"List", "Dictionary", "HashSet", "SortedSet", "SortedDictionary", "LinkedList",
        "Queue", "Stack", "IList", "IDictionary", "IEnumerable", "IEnumerator", "ICollection",
        "ISet", "KeyValuePair", "IComparer", "IEqualityComparer", "KeyNotFoundException"}},
      {"System.Collections", {"ArrayList", "Hashtable", "IEnumerable", "IEnumerator"}},
      {"System.Text", {"StringBuilder", "Encoding"}},
      {"System.IO",
       {"TextWriter", "TextReader", "Stream", "File", "Path", "IOException", "StreamReader",
        "StreamWriter", "StringReader", "StringWriter", "FileStream", "MemoryStream"}},
      {"System.Linq", {"Enumerable"}},
  };
  return catalog;
}

const std::set<std::string_view> kPunctuation{"{", "}", ";", ",", "(", ")", ".", "[", "]", ":"};

std::string strip_generics(const std::string& type) {
  std::string out;
  int depth = 0;
  for (char c : type) {
    if (c == '<') ++depth;
    else if (c == '>') --depth;
    else if (depth == 0) out += c;
  }
  return out;
}

// `java.util.List<java.lang.String>` -> `List`; `int[]` -> `int[]`.
std::string simple_type_name(const std::string& type) {
  auto base = strip_generics(type);
  std::string suffix;
  while (base.ends_with("[]")) {
    suffix += "[]";
    base.resize(base.size() - 2);
  }
  if (base.ends_with("?")) {
    suffix = "?" + suffix;
    base.pop_back();
  }
  auto dot = base.rfind('.');
  if (dot != std::string::npos) base = base.substr(dot + 1);
  if (auto p = canonical_primitive(base)) base = *p;
  return base + suffix;
}

bool is_numeric(const std::string& t) {
  return t == "int" || t == "long" || t == "float" || t == "double" || t == "short" ||
         t == "byte" || t == "char";
}

int numeric_rank(const std::string& t) {
  if (t == "double") return 4;
  if (t == "float") return 3;
  if (t == "long") return 2;
  return 1;
}

std::string literal_simple_type(const Node& lit) {
  if (lit.text == "string") return "String";
  if (lit.text == "char") return "char";
  if (lit.text == "boolean") return "bool";
  if (lit.text == "null") return "null";
  const auto& lex = lit.detail;
  bool hex = lex.size() > 1 && lex[0] == '0' && (lex[1] == 'x' || lex[1] == 'X');
  char last = lex.empty() ? '0' : lex.back();
  if (!hex && (last == 'f' || last == 'F')) return "float";
  if (!hex && (last == 'd' || last == 'D')) return "double";
  if (last == 'm' || last == 'M') return "decimal";
  if (last == 'l' || last == 'L') return "long";
  if (!hex && lex.find_first_of(".eE") != std::string::npos) return "double";
  return "int";
}

}  // namespace

// ---------------------------------------------------------------------------

Language parse_language(std::string_view id) {
  if (id == "java") return Language::java;
  if (id == "csharp") return Language::csharp;
  throw ArgumentError("unsupported language id: " + std::string(id));
}

std::string_view language_name(Language lang) {
  return lang == Language::java ? "java" : "csharp";
}

std::string_view node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::unit: return "unit";
    case NodeKind::package_decl: return "package_decl";
    case NodeKind::import_decl: return "import_decl";
    case NodeKind::class_decl: return "class";
    case NodeKind::func_decl: return "func_decl";
    case NodeKind::decl_stmt: return "decl_stmt";
    case NodeKind::decl: return "decl";
    case NodeKind::expr_stmt: return "expr_stmt";
    case NodeKind::expr: return "expr";
    case NodeKind::func_call: return "func_call";
    case NodeKind::new_obj: return "new_obj";
    case NodeKind::argument: return "argument";
    case NodeKind::literal: return "literal";
    case NodeKind::if_stmt: return "if_stmt";
    case NodeKind::loop: return "loop";
    case NodeKind::return_stmt: return "return_stmt";
    case NodeKind::block: return "block";
    case NodeKind::opaque: return "opaque";
    case NodeKind::modifier: return "modifier";
    case NodeKind::type_ref: return "type";
    case NodeKind::declarator: return "name";
    case NodeKind::name_ref: return "name_ref";
    case NodeKind::member: return "member";
    case NodeKind::op: return "op";
    case NodeKind::keyword: return "keyword";
    case NodeKind::ident: return "ident";
    case NodeKind::binary: return "binary";
    case NodeKind::unary: return "unary";
    case NodeKind::conditional: return "conditional";
    case NodeKind::cast: return "cast";
    case NodeKind::index: return "index";
    case NodeKind::array_init: return "array_init";
    case NodeKind::new_array: return "new_array";
    case NodeKind::callee: return "callee";
  }
  return "?";
}

std::string_view structural_keyword(NodeKind kind) {
  switch (kind) {
    case NodeKind::class_decl: return "class";
    case NodeKind::func_decl: return "func_decl";
    case NodeKind::decl_stmt: return "decl_stmt";
    case NodeKind::decl: return "decl";
    case NodeKind::expr_stmt: return "expr_stmt";
    case NodeKind::expr: return "expr";
    case NodeKind::func_call:
    case NodeKind::new_obj: return "func_call";
    case NodeKind::argument: return "argument";
    case NodeKind::literal: return "literal_type";
    case NodeKind::if_stmt: return "if_stmt";
    case NodeKind::loop: return "loop";
    case NodeKind::return_stmt: return "return_stmt";
    case NodeKind::block: return "block";
    case NodeKind::opaque: return "opaque";
    default: return {};
  }
}

std::optional<std::string> canonical_primitive(std::string_view type) {
  if (type == "boolean" || type == "bool") return "bool";
  if (type == "int" || type == "long" || type == "float" || type == "double" || type == "char" ||
      type == "byte" || type == "short")
    return std::string(type);
  return std::nullopt;
}

// ---- SymbolTable ------------------------------------------------------------

SymbolTable::SymbolTable(Language language) : language_(language), scopes_(1) {}

void SymbolTable::add_import(const std::string& simple, const std::string& qualified) {
  imports_[simple] = qualified;
}

void SymbolTable::add_namespace_import(const std::string& ns) {
  if (std::find(namespaces_.begin(), namespaces_.end(), ns) == namespaces_.end())
    namespaces_.push_back(ns);
}

void SymbolTable::push_scope() { scopes_.emplace_back(); }

void SymbolTable::pop_scope() {
  if (scopes_.size() > 1) scopes_.pop_back();
}

void SymbolTable::declare(const std::string& name, const std::string& type) {
  scopes_.back()[name] = type;
}

std::optional<std::string> SymbolTable::lookup_variable(const std::string& name) const {
  for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
    auto f = it->find(name);
    if (f != it->end()) return f->second;
  }
  return std::nullopt;
}

std::optional<std::string> SymbolTable::lookup_type(const std::string& simple) const {
  if (language_ == Language::csharp) {
    if (simple == "string") return "System.String";
    if (simple == "object") return "System.Object";
  }
  if (auto it = imports_.find(simple); it != imports_.end()) return it->second;
  const auto& catalog = sdk_catalog();
  for (const auto& ns : namespaces_) {
    auto it = catalog.find(ns);
    if (it != catalog.end() && it->second.count(simple)) return ns + "." + simple;
  }
  if (language_ == Language::java && catalog.at("java.lang").count(simple))
    return "java.lang." + simple;
  return std::nullopt;
}

std::string resolve_signature(const std::string& name, const SymbolTable& symbols) {
  auto paren = name.find('(');
  std::string base = name.substr(0, paren);
  std::string suffix = paren == std::string::npos ? "" : name.substr(paren);
  if (base.empty()) return name;
  auto parts = split(base, '.');
  const std::string& head = parts[0];
  std::string rest;
  for (std::size_t i = 1; i < parts.size(); ++i) rest += "." + parts[i];

  if (head == "this")
    return (symbols.current_class.empty() ? "unk" : symbols.current_class) + rest + suffix;
  if (head == "super" || head == "base")
    return (symbols.current_base.empty() ? "unk" : symbols.current_base) + rest + suffix;
  if (auto var = symbols.lookup_variable(head)) {
    if (parts.size() == 1 && suffix.empty()) return *var;
    return strip_generics(*var) + rest + suffix;
  }
  if (auto type = symbols.lookup_type(head)) return *type + rest + suffix;
  if (parts.size() > 1) return name;
  if (!suffix.empty() && !symbols.current_class.empty())
    return symbols.current_class + "." + head + suffix;
  return "unk." + head + suffix;
}

// ---- token kinds / granularity ---------------------------------------------

std::string_view token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::struct_kw: return "struct_kw";
    case TokenKind::signature: return "signature";
    case TokenKind::primitive_placeholder: return "primitive_placeholder";
    case TokenKind::keyword: return "keyword";
    case TokenKind::literal_kind: return "literal_kind";
  }
  return "?";
}

std::vector<std::string> EnrichedTokenStream::texts() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::vector<std::string> EnrichedTokenStream::signature_tokens() const {
  std::vector<std::string> out;
  for (const auto& t : tokens)
    if (t.kind != TokenKind::struct_kw) out.push_back(t.text);
  return out;
}

std::string_view granularity_name(Granularity g) {
  switch (g) {
    case Granularity::expression: return "expression";
    case Granularity::statement: return "statement";
    case Granularity::method: return "method";
  }
  return "?";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "expression") return Granularity::expression;
  if (name == "statement") return Granularity::statement;
  if (name == "method") return Granularity::method;
  throw ArgumentError("unknown granularity: " + std::string(name));
}

// ---- emitter ----------------------------------------------------------------

namespace {

class Emitter {
 public:
  using NodeHook = std::function<void(const Node&, std::size_t, std::size_t)>;

  Emitter(const SymbolTable& symbols, NodeHook hook) : syms_(symbols), hook_(std::move(hook)) {}

  std::vector<EnrichedToken> run(const Node& root) {
    register_declarations(root, syms_.package, "");
    emit(root);
    return std::move(out_);
  }

 private:
  // File-level pre-pass: imports and every declared class name.
  void register_declarations(const Node& n, std::string package, const std::string& outer) {
    for (const auto& c : n.children) {
      switch (c.kind) {
        case NodeKind::package_decl:
          if (c.children.empty()) {
            package = c.text;
          } else {
            register_declarations(c, package.empty() ? c.text : package + "." + c.text, "");
          }
          break;
        case NodeKind::import_decl: {
          auto last = c.text.substr(c.text.rfind('.') + 1);
          if (c.detail == "*") syms_.add_namespace_import(c.text);
          else if (c.detail.empty() || c.detail == "static") syms_.add_import(last, c.text);
          else syms_.add_import(c.detail, c.text);
          break;
        }
        case NodeKind::class_decl: {
          std::string q = outer.empty() ? (package.empty() ? c.text : package + "." + c.text)
                                        : outer + "." + c.text;
          syms_.add_import(c.text, q);
          register_declarations(c, package, q);
          break;
        }
        default: break;
      }
    }
  }

  void push(std::string text, TokenKind kind, Span span) {
    out_.push_back({std::move(text), kind, span});
  }

  void push_kw(NodeKind kind) {
    auto kw = structural_keyword(kind);
    if (!kw.empty()) push(std::string(kw), TokenKind::struct_kw, {});
  }

  // Resolves a written type to its signature token.
  std::string resolve_type(const std::string& text) {
    if (text.empty()) return text;
    std::string base = text;
    std::string suffix;
    while (base.ends_with("[]")) {
      suffix = "[]" + suffix;
      base.resize(base.size() - 2);
    }
    if (base.ends_with("?") && base.find('<') == std::string::npos) {
      suffix = "?" + suffix;
      base.pop_back();
    }
    std::string args;
    if (auto lt = base.find('<'); lt != std::string::npos && base.back() == '>') {
      auto inner = base.substr(lt + 1, base.size() - lt - 2);
      base = base.substr(0, lt);
      args = "<";
      int depth = 0;
      std::string cur;
      bool first = true;
      auto flush = [&] {
        if (!first) args += ",";
        first = false;
        if (cur.empty() || cur[0] == '?') {
          args += cur.size() > 2 ? cur.substr(0, 2) + resolve_type(cur.substr(2)) : cur;
        } else {
          args += resolve_type(cur);
        }
        cur.clear();
      };
      for (char c : inner) {
        if (c == '<') ++depth;
        if (c == '>') --depth;
        if (c == ',' && depth == 0) {
          flush();
          continue;
        }
        cur += c;
      }
      if (!inner.empty()) flush();
      args += ">";
    }
    if (auto p = canonical_primitive(base)) return *p + args + suffix;
    if (base == "void" || base == "var" || base == "decimal" || base == "sbyte" ||
        base == "uint" || base == "ulong" || base == "ushort" || base == "dynamic")
      return base + args + suffix;
    auto parts = split(base, '.');
    std::string rest;
    for (std::size_t i = 1; i < parts.size(); ++i) rest += "." + parts[i];
    std::string resolved;
    if (auto t = syms_.lookup_type(parts[0])) resolved = *t + rest;
    else if (parts.size() > 1) resolved = base;
    else resolved = "unk." + base;
    return resolved + args + suffix;
  }

  static TokenKind type_token_kind(const std::string& resolved) {
    auto base = strip_generics(resolved);
    while (base.ends_with("[]")) base.resize(base.size() - 2);
    if (canonical_primitive(base) || base == "void" || base == "var") return TokenKind::keyword;
    return TokenKind::signature;
  }

  std::string variable_token(const std::string& type) {
    if (auto p = canonical_primitive(type)) return *p + "_id";
    if (type == "var" || type.empty()) return "var_id";
    return type;
  }

  static TokenKind variable_kind(const std::string& token) {
    return token.ends_with("_id") && token.find('.') == std::string::npos
               ? TokenKind::primitive_placeholder
               : TokenKind::signature;
  }

  // Fully resolved type of an expression when it is evident from literals,
  // declarations or `new`; nullopt otherwise.
  std::optional<std::string> resolved_type_of(const Node& e) {
    switch (e.kind) {
      case NodeKind::expr:
      case NodeKind::argument:
        return e.children.empty() ? std::nullopt : resolved_type_of(e.children.back());
      case NodeKind::literal: {
        auto s = literal_simple_type(e);
        if (s == "String") return syms_.lookup_type(syms_.language() == Language::java ? "String" : "string");
        if (s == "null") return std::nullopt;
        return s;
      }
      case NodeKind::new_obj:
      case NodeKind::new_array: return resolve_type(e.children.front().text);
      case NodeKind::cast: return resolve_type(e.children.front().text);
      case NodeKind::name_ref: {
        auto parts = split(e.text, '.');
        if (parts.size() == 1) {
          if (parts[0] == "this" && !syms_.current_class.empty()) return syms_.current_class;
          return syms_.lookup_variable(parts[0]);
        }
        if (parts.size() == 2 && parts[0] == "this") return syms_.lookup_variable(parts[1]);
        return std::nullopt;
      }
      case NodeKind::index: {
        auto t = resolved_type_of(e.children.front());
        if (t && t->ends_with("[]")) return t->substr(0, t->size() - 2);
        return std::nullopt;
      }
      case NodeKind::binary:
      case NodeKind::unary:
      case NodeKind::conditional: {
        auto s = simple_type_of(e);
        if (s != "?" && canonical_primitive(s)) return s;
        return std::nullopt;
      }
      default: return std::nullopt;
    }
  }

  // Simple type name used inside call signatures; "?" when unknown.
  std::string simple_type_of(const Node& e) {
    switch (e.kind) {
      case NodeKind::expr:
      case NodeKind::argument:
        return e.children.empty() ? "?" : simple_type_of(e.children.back());
      case NodeKind::literal: return literal_simple_type(e);
      case NodeKind::binary: {
        const auto& op = e.children[1].text;
        if (op == "==" || op == "!=" || op == "<" || op == ">" || op == "<=" || op == ">=" ||
            op == "&&" || op == "||" || op == "instanceof" || op == "is")
          return "bool";
        auto l = simple_type_of(e.children[0]);
        if (op.size() >= 1 && op.back() == '=' && op != "==" && op != "!=") return l;
        if (op == "as") return simple_type_name(e.children[2].text);
        auto r = simple_type_of(e.children[2]);
        if (op == "+" && (l == "String" || r == "String")) return "String";
        if (l == r) return l;
        if (is_numeric(l) && is_numeric(r)) return numeric_rank(l) >= numeric_rank(r) ? l : r;
        return "?";
      }
      case NodeKind::unary: {
        if (e.children.front().kind == NodeKind::op && e.children.front().text == "!") return "bool";
        const auto& operand =
            e.children.front().kind == NodeKind::op ? e.children.back() : e.children.front();
        return simple_type_of(operand);
      }
      case NodeKind::conditional: {
        auto a = simple_type_of(e.children[2]);
        return a == simple_type_of(e.children[3]) ? a : "?";
      }
      default: {
        auto t = resolved_type_of(e);
        return t ? simple_type_name(*t) : "?";
      }
    }
  }

  std::string arg_list(const Node& call, std::size_t first_arg) {
    std::string out = "(";
    bool first = true;
    for (std::size_t i = first_arg; i < call.children.size(); ++i) {
      if (call.children[i].kind != NodeKind::argument) continue;
      if (!first) out += ",";
      first = false;
      out += simple_type_of(call.children[i]);
    }
    return out + ")";
  }

  void emit_children(const Node& n, std::size_t from = 0) {
    for (std::size_t i = from; i < n.children.size(); ++i) emit(n.children[i]);
  }

  void emit_class(const Node& n) {
    std::string qualified = class_path_.empty()
                                ? (syms_.package.empty() ? n.text : syms_.package + "." + n.text)
                                : class_path_.back() + "." + n.text;
    push_kw(n.kind);
    std::size_t i = 0;
    for (; i < n.children.size() && n.children[i].kind == NodeKind::modifier; ++i)
      emit(n.children[i]);
    push(qualified, TokenKind::signature, n.span);
    std::string first_base;
    for (; i < n.children.size() && n.children[i].kind == NodeKind::type_ref; ++i) {
      auto base = resolve_type(n.children[i].text);
      if (first_base.empty()) first_base = base;
      push(base, type_token_kind(base), n.children[i].span);
      hook_(n.children[i], out_.size() - 1, out_.size());
    }
    auto saved_class = syms_.current_class;
    auto saved_base = syms_.current_base;
    syms_.current_class = qualified;
    syms_.current_base = strip_generics(first_base);
    class_path_.push_back(qualified);
    syms_.push_scope();
    for (const auto& m : n.children) {
      if (m.kind != NodeKind::decl_stmt) continue;
      for (const auto& d : m.children)
        if (d.kind == NodeKind::decl) syms_.declare(d.children[1].text, resolve_type(d.children[0].text));
    }
    emit_children(n, i);
    syms_.pop_scope();
    class_path_.pop_back();
    syms_.current_class = saved_class;
    syms_.current_base = saved_base;
  }

  void emit_func(const Node& n) {
    push_kw(n.kind);
    std::size_t i = 0;
    for (; i < n.children.size() && n.children[i].kind == NodeKind::modifier; ++i)
      emit(n.children[i]);
    if (i < n.children.size() && n.children[i].kind == NodeKind::type_ref) emit(n.children[i++]);
    syms_.push_scope();
    std::string params = "(";
    bool first = true;
    for (std::size_t k = i; k < n.children.size(); ++k) {
      const auto& p = n.children[k];
      if (p.kind != NodeKind::decl) continue;
      if (!first) params += ",";
      first = false;
      params += simple_type_name(p.children[0].text);
    }
    params += ")";
    std::string owner = syms_.current_class.empty() ? "unk" : syms_.current_class;
    push(owner + "." + n.text + params, TokenKind::signature, n.span);
    emit_children(n, i);
    syms_.pop_scope();
  }

  void emit_decl(const Node& n) {
    push_kw(n.kind);
    const Node& type = n.children[0];
    const Node& name = n.children[1];
    std::string resolved = resolve_type(type.text);
    if (resolved == "var" && n.children.size() > 2) {
      if (auto t = resolved_type_of(n.children[2])) resolved = *t;
    }
    push(resolved, type_token_kind(resolved), type.span);
    hook_(type, out_.size() - 1, out_.size());
    auto var_tok = variable_token(resolved);
    push(var_tok, variable_kind(var_tok), name.span);
    hook_(name, out_.size() - 1, out_.size());
    emit_children(n, 2);
    syms_.declare(name.text, resolved);
  }

  std::string name_token(const std::string& chain) {
    auto parts = split(chain, '.');
    std::optional<std::string> var;
    if (parts.size() == 1) {
      if (parts[0] == "this" || parts[0] == "super" || parts[0] == "base")
        return resolve_signature(chain, syms_);
      var = syms_.lookup_variable(parts[0]);
    } else if (parts.size() == 2 && parts[0] == "this") {
      var = syms_.lookup_variable(parts[1]);
    }
    if (var) return variable_token(*var);
    return resolve_signature(chain, syms_);
  }

  void emit(const Node& n) {
    std::size_t begin = out_.size();
    switch (n.kind) {
      case NodeKind::unit: emit_children(n); break;
      case NodeKind::package_decl: {
        if (n.children.empty()) {
          syms_.package = n.text;
        } else {
          auto saved = syms_.package;
          syms_.package = saved.empty() ? n.text : saved + "." + n.text;
          emit_children(n);
          syms_.package = saved;
        }
        break;
      }
      case NodeKind::import_decl: break;
      case NodeKind::class_decl: emit_class(n); break;
      case NodeKind::func_decl: emit_func(n); break;
      case NodeKind::decl: emit_decl(n); break;
      case NodeKind::block:
      case NodeKind::loop:
        push_kw(n.kind);
        syms_.push_scope();
        emit_children(n);
        syms_.pop_scope();
        break;
      case NodeKind::func_call: {
        push_kw(n.kind);
        const Node& callee = n.children.front();
        std::string sig;
        if (callee.children.empty()) {
          sig = resolve_signature(n.text + arg_list(n, 1), syms_);
        } else if (callee.children.front().kind == NodeKind::name_ref) {
          sig = resolve_signature(callee.children.front().text + "." + n.text + arg_list(n, 1), syms_);
        } else {
          auto recv = resolved_type_of(callee.children.front());
          sig = (recv ? strip_generics(*recv) : std::string("unk")) + "." + n.text + arg_list(n, 1);
        }
        push(sig, TokenKind::signature, callee.span.empty() ? n.span : callee.span);
        if (!callee.children.empty() && callee.children.front().kind != NodeKind::name_ref)
          emit(callee.children.front());
        emit_children(n, 1);
        break;
      }
      case NodeKind::new_obj: {
        push_kw(n.kind);
        const Node& type = n.children.front();
        push("new", TokenKind::keyword, {n.span.begin, n.span.begin + 3});
        push(strip_generics(resolve_type(type.text)) + arg_list(n, 1), TokenKind::signature, type.span);
        emit_children(n, 1);
        break;
      }
      case NodeKind::new_array: {
        push("new", TokenKind::keyword, {n.span.begin, n.span.begin + 3});
        emit_children(n);
        break;
      }
      case NodeKind::literal:
        push_kw(n.kind);
        push(n.text, TokenKind::literal_kind, n.span);
        break;
      case NodeKind::modifier:
      case NodeKind::keyword: push(n.text, TokenKind::keyword, n.span); break;
      case NodeKind::ident: push(n.text, TokenKind::signature, n.span); break;
      case NodeKind::op:
        if (!kPunctuation.count(n.text)) push(n.text, TokenKind::keyword, n.span);
        break;
      case NodeKind::type_ref: {
        auto resolved = resolve_type(n.text);
        push(resolved, type_token_kind(resolved), n.span);
        break;
      }
      case NodeKind::declarator: {
        auto tok = variable_token("var");
        push(tok, variable_kind(tok), n.span);
        break;
      }
      case NodeKind::name_ref: {
        auto tok = name_token(n.text);
        push(tok, variable_kind(tok), n.span);
        break;
      }
      case NodeKind::member: {
        auto recv = resolved_type_of(n.children.front());
        std::string sig = (recv ? strip_generics(*recv) : std::string("unk")) + "." + n.text;
        push(sig, TokenKind::signature, n.span);
        emit_children(n);
        break;
      }
      default:
        push_kw(n.kind);
        emit_children(n);
        break;
    }
    hook_(n, begin, out_.size());
  }

  SymbolTable syms_;
  NodeHook hook_;
  std::vector<std::string> class_path_;
  std::vector<EnrichedToken> out_;
};

bool is_statement(const Node& n) {
  switch (n.kind) {
    case NodeKind::decl_stmt:
    case NodeKind::expr_stmt:
    case NodeKind::if_stmt:
    case NodeKind::loop:
    case NodeKind::return_stmt: return true;
    case NodeKind::opaque: return n.detail == "stmt";
    default: return false;
  }
}

}  // namespace

EnrichedTokenStream normalize(const SyntaxTree& tree, const SymbolTable& symbols,
                              const std::filesystem::path& file) {
  EnrichedTokenStream stream;
  stream.file = file;
  stream.language = tree.language;
  Emitter emitter(symbols, [](const Node&, std::size_t, std::size_t) {});
  stream.tokens = emitter.run(tree.root);
  return stream;
}

EnrichedTokenStream normalize(const SyntaxTree& tree, const std::filesystem::path& file) {
  return normalize(tree, SymbolTable(tree.language), file);
}

std::vector<CodeElement> extract_elements(const SyntaxTree& tree, const EnrichedTokenStream& stream) {
  // Token counts per node do not depend on symbol resolution, so a replay
  // with an empty environment yields the same ranges as the original run.
  std::vector<std::pair<const Node*, std::pair<std::size_t, std::size_t>>> hits;
  Emitter emitter(SymbolTable(tree.language), [&](const Node& n, std::size_t b, std::size_t e) {
    if (e > b && (n.kind == NodeKind::expr || n.kind == NodeKind::func_decl || is_statement(n)))
      hits.push_back({&n, {b, e}});
  });
  auto replay = emitter.run(tree.root);
  if (replay.size() != stream.tokens.size())
    throw ArgumentError("token stream was not produced from this syntax tree");
  std::sort(hits.begin(), hits.end(), [](const auto& x, const auto& y) {
    if (x.second.first != y.second.first) return x.second.first < y.second.first;
    return x.second.second > y.second.second;
  });

  std::vector<CodeElement> elements;
  for (const auto& [node, range] : hits) {
    CodeElement el;
    el.span = node->span;
    for (std::size_t i = range.first; i < range.second; ++i) el.token_indices.push_back(i);
    if (node->kind == NodeKind::func_decl) {
      el.granularity = Granularity::method;
      auto sig = std::find_if(stream.tokens.begin() + static_cast<std::ptrdiff_t>(range.first),
                              stream.tokens.begin() + static_cast<std::ptrdiff_t>(range.second),
                              [](const EnrichedToken& t) { return t.text.find('(') != std::string::npos; });
      el.label = sig != stream.tokens.end() ? sig->text : std::string(node->text);
    } else {
      el.granularity = node->kind == NodeKind::expr ? Granularity::expression : Granularity::statement;
      el.label = std::string(node_kind_name(node->kind)) + "@" + std::to_string(node->span.begin);
    }
    elements.push_back(std::move(el));
  }
  return elements;
}

// ---- file formats -------------------------------------------------------------

std::string format_stream(const EnrichedTokenStream& stream) {
  std::string out = "#" + std::string(language_name(stream.language)) + " " +
                    stream.file.generic_string() + "\n";
  for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
    if (i) out += ' ';
    out += stream.tokens[i].text;
  }
  return out + "\n";
}

namespace {

TokenKind recover_kind(const std::string& text) {
  static const std::set<std::string_view> structural{
      "unit", "class", "func_decl", "decl_stmt", "decl", "expr_stmt", "expr", "func_call",
      "argument", "literal_type", "if_stmt", "loop", "return_stmt", "block", "opaque"};
  static const std::set<std::string_view> literal_kinds{"string", "char", "number", "boolean", "null"};
  if (structural.count(text)) return TokenKind::struct_kw;
  if (literal_kinds.count(text)) return TokenKind::literal_kind;
  if (text.ends_with("_id") && text.find('.') == std::string::npos)
    return TokenKind::primitive_placeholder;
  if (text.find_first_of(".(") != std::string::npos) return TokenKind::signature;
  return TokenKind::keyword;
}

}  // namespace

EnrichedTokenStream parse_stream(std::string_view text, const std::string& source) {
  auto lines = split_lines(text);
  std::size_t i = skip_provenance(lines);
  if (i >= lines.size() || lines[i].empty() || lines[i][0] != '#')
    throw ParseError(source, static_cast<int>(i + 1), 0, "expected '#<language> <path>' header");
  const auto& header = lines[i];
  auto space = header.find(' ');
  EnrichedTokenStream stream;
  try {
    stream.language = parse_language(header.substr(1, space == std::string::npos ? std::string::npos : space - 1));
  } catch (const ArgumentError& e) {
    throw ParseError(source, static_cast<int>(i + 1), 0, e.what());
  }
  if (space != std::string::npos) stream.file = header.substr(space + 1);
  if (i + 1 < lines.size()) {
    for (auto& tok : split_ws(lines[i + 1])) {
      auto kind = recover_kind(tok);
      stream.tokens.push_back({std::move(tok), kind, {}});
    }
  }
  return stream;
}

std::string format_elements(const std::vector<CodeElement>& elements) {
  std::string out;
  for (const auto& e : elements) {
    out += std::string(granularity_name(e.granularity)) + '\t' + std::to_string(e.span.begin) +
           '\t' + std::to_string(e.span.end) + '\t' + std::to_string(e.token_indices.front()) +
           '\t' + std::to_string(e.token_indices.back()) + '\t' + e.label + '\n';
  }
  return out;
}

std::vector<CodeElement> parse_elements(std::string_view text, const std::string& source) {
  auto lines = split_lines(text);
  std::vector<CodeElement> out;
  for (std::size_t i = skip_provenance(lines); i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = split(lines[i], '\t');
    int line = static_cast<int>(i + 1);
    if (cols.size() != 6) throw ParseError(source, line, 0, "expected 6 tab-separated fields");
    CodeElement e;
    try {
      e.granularity = parse_granularity(cols[0]);
      e.span = {static_cast<std::uint32_t>(std::stoul(cols[1])),
                static_cast<std::uint32_t>(std::stoul(cols[2]))};
      auto first = std::stoul(cols[3]);
      auto last = std::stoul(cols[4]);
      if (last < first) throw std::invalid_argument("token range reversed");
      for (auto k = first; k <= last; ++k) e.token_indices.push_back(k);
    } catch (const std::exception& ex) {
      throw ParseError(source, line, 0, ex.what());
    }
    e.label = cols[5];
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace codemap::syntax

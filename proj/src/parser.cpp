#include <algorithm>
#include <optional>
#include <type_traits>
#include <unordered_set>

#include "codemap/error.hpp"
#include "codemap/syntax.hpp"
#include "lexer.hpp"

namespace codemap::syntax {

using detail::Tok;
using detail::Token;

namespace {

// Thrown inside a statement when the input leaves the supported subset; the
// statement is re-read as an opaque node.
struct Unsupported {};

const std::unordered_set<std::string_view> kModifiers{
    "public",   "private",  "protected", "static",   "final",     "abstract", "readonly",
    "const",    "virtual",  "override",  "sealed",   "internal",  "native",   "transient",
    "volatile", "strictfp", "extern",    "unsafe",   "synchronized"};

const std::unordered_set<std::string_view> kContextualModifiers{"partial", "async"};

const std::unordered_set<std::string_view> kPrimitiveKeywords{
    "int",  "long",  "float", "double", "boolean", "bool",   "char",   "byte",
    "short", "void", "sbyte", "uint",   "ulong",   "ushort", "decimal", "string", "object"};

struct OpInfo {
  int prec;
  bool right;
};

std::optional<OpInfo> binary_op(std::string_view op) {
  static const std::vector<std::pair<std::string_view, OpInfo>> table{
      {"=", {1, true}},    {"+=", {1, true}},  {"-=", {1, true}},   {"*=", {1, true}},
      {"/=", {1, true}},   {"%=", {1, true}},  {"&=", {1, true}},   {"|=", {1, true}},
      {"^=", {1, true}},   {"<<=", {1, true}}, {">>=", {1, true}},  {">>>=", {1, true}},
      {"?\?=", {1, true}},  {"?", {2, true}},   {"??", {3, true}},   {"||", {4, false}},
      {"&&", {5, false}},  {"|", {6, false}},  {"^", {7, false}},   {"&", {8, false}},
      {"==", {9, false}},  {"!=", {9, false}}, {"<", {10, false}},  {">", {10, false}},
      {"<=", {10, false}}, {">=", {10, false}}, {"instanceof", {10, false}},
      {"is", {10, false}}, {"as", {10, false}}, {"<<", {11, false}}, {">>", {11, false}},
      {">>>", {11, false}}, {"+", {12, false}}, {"-", {12, false}},  {"*", {13, false}},
      {"/", {13, false}},  {"%", {13, false}}};
  for (const auto& [name, info] : table)
    if (name == op) return info;
  return std::nullopt;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, Language lang, const std::string& file, std::size_t size)
      : toks_(std::move(toks)), lang_(lang), file_(file), size_(size) {}

  Node parse_unit() {
    Node root;
    root.kind = NodeKind::unit;
    root.span = {0, static_cast<std::uint32_t>(size_)};
    while (!at_eof()) {
      if (is_op("}")) fail(cur(), "unbalanced '}'");
      if (auto n = parse_top_item()) root.children.push_back(std::move(*n));
    }
    return root;
  }

 private:
  // ---- token helpers ----------------------------------------------------
  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t k = 1) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool at_eof() const { return cur().kind == Tok::eof; }
  bool is_op(std::string_view s) const { return cur().kind == Tok::op && cur().text == s; }
  bool is_kw(std::string_view s) const { return cur().kind == Tok::keyword && cur().text == s; }
  bool is_ident() const { return cur().kind == Tok::ident; }
  bool is_ident(std::string_view s) const { return is_ident() && cur().text == s; }
  bool peek_op(std::size_t k, std::string_view s) const {
    return peek(k).kind == Tok::op && peek(k).text == s;
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(file_, t.line, t.column, msg);
  }

  void expect_op(std::string_view s) {
    if (!is_op(s)) throw Unsupported{};
    ++pos_;
  }

  Span span_from(std::size_t first) const {
    if (pos_ == first) return {toks_[first].begin, toks_[first].begin};
    return {toks_[first].begin, toks_[pos_ - 1].end};
  }

  Node leaf(NodeKind kind, const Token& t) const {
    Node n;
    n.kind = kind;
    n.span = {t.begin, t.end};
    n.text = t.text;
    return n;
  }

  Node take_leaf(NodeKind kind) {
    Node n = leaf(kind, cur());
    ++pos_;
    return n;
  }

  // Skips a balanced bracket group starting at the current opener. Throws
  // ParseError if it never closes.
  void skip_balanced() {
    const Token& open = cur();
    std::vector<std::string> stack;
    do {
      if (at_eof()) fail(open, "unbalanced '" + open.text + "'");
      if (cur().kind == Tok::op) {
        const auto& t = cur().text;
        if (t == "(" || t == "[" || t == "{") {
          stack.push_back(t);
        } else if (t == ")" || t == "]" || t == "}") {
          if (stack.empty()) fail(cur(), "unbalanced '" + t + "'");
          stack.pop_back();
        }
      }
      ++pos_;
    } while (!stack.empty());
  }

  void skip_angles() {
    int depth = 0;
    do {
      if (at_eof()) throw Unsupported{};
      if (is_op("<")) ++depth;
      else if (is_op(">")) --depth;
      else if (is_op(";") || is_op("{") || is_op("}")) throw Unsupported{};
      ++pos_;
    } while (depth > 0);
  }

  std::string qualified_name() {
    if (!is_ident() && cur().kind != Tok::keyword) throw Unsupported{};
    std::string name = cur().text;
    ++pos_;
    while (is_op(".") && (peek().kind == Tok::ident || peek().kind == Tok::keyword)) {
      name += "." + peek().text;
      pos_ += 2;
    }
    return name;
  }

  // ---- raw (opaque) scanning ---------------------------------------------

  void append_raw(Node& n, const Token& t) const {
    switch (t.kind) {
      case Tok::ident: n.children.push_back(leaf(NodeKind::ident, t)); break;
      case Tok::keyword: n.children.push_back(leaf(NodeKind::keyword, t)); break;
      case Tok::number:
      case Tok::string:
      case Tok::chr:
      case Tok::boolean:
      case Tok::null: n.children.push_back(literal_leaf(t)); break;
      case Tok::op: n.children.push_back(leaf(NodeKind::op, t)); break;
      case Tok::eof: break;
    }
  }

  // Consumes one statement-like run of tokens: up to `;` at depth 0, or a
  // brace group closing at depth 0 (continuing through else/catch/finally).
  Node raw_statement(bool stmt_position) {
    std::size_t first = pos_;
    Node n;
    n.kind = NodeKind::opaque;
    if (stmt_position) n.detail = "stmt";
    std::vector<const Token*> stack;
    while (!at_eof()) {
      const Token& t = cur();
      if (t.kind == Tok::op) {
        if (t.text == "(" || t.text == "[" || t.text == "{") {
          stack.push_back(&t);
        } else if (t.text == ")" || t.text == "]" || t.text == "}") {
          if (stack.empty()) {
            if (t.text == "}") break;  // end of the enclosing block
            fail(t, "unbalanced '" + t.text + "'");
          }
          stack.pop_back();
          if (t.text == "}" && stack.empty()) {
            append_raw(n, t);
            ++pos_;
            if (is_op(";")) {
              ++pos_;
              break;
            }
            if (is_kw("else") || is_kw("catch") || is_kw("finally") || is_op(")") ||
                is_op(",") || is_op(".") || is_op("("))
              continue;
            break;
          }
        } else if (t.text == ";" && stack.empty()) {
          ++pos_;
          break;
        }
      }
      append_raw(n, t);
      ++pos_;
    }
    if (!stack.empty()) fail(*stack.back(), "unbalanced '" + stack.back()->text + "'");
    n.span = span_from(first);
    return n;
  }

  // ---- declarations -------------------------------------------------------

  std::optional<Node> parse_top_item() {
    std::size_t first = pos_;
    if (lang_ == Language::java && is_kw("package")) {
      ++pos_;
      Node n;
      n.kind = NodeKind::package_decl;
      n.text = guarded([&] { return qualified_name(); });
      if (is_op(";")) ++pos_;
      n.span = span_from(first);
      return n;
    }
    if (lang_ == Language::java && is_kw("import")) return parse_import();
    if (lang_ == Language::csharp && is_ident("global") && peek().kind == Tok::keyword &&
        peek().text == "using")
      ++pos_;
    if (lang_ == Language::csharp && is_kw("using") && !peek_op(1, "(")) return parse_import();
    if (lang_ == Language::csharp && is_kw("namespace")) {
      ++pos_;
      Node n;
      n.kind = NodeKind::package_decl;
      n.text = guarded([&] { return qualified_name(); });
      if (is_op(";")) {
        ++pos_;
      } else if (is_op("{")) {
        const Token& open = cur();
        ++pos_;
        while (!is_op("}")) {
          if (at_eof()) fail(open, "unbalanced '{'");
          if (auto m = parse_top_item()) n.children.push_back(std::move(*m));
        }
        ++pos_;
      }
      n.span = span_from(first);
      return n;
    }
    return parse_member(/*in_class=*/false);
  }

  template <class F>
  std::invoke_result_t<F> guarded(F&& f) {
    try {
      return f();
    } catch (const Unsupported&) {
      fail(cur(), "unexpected '" + cur().text + "'");
    }
  }

  Node parse_import() {
    std::size_t first = pos_;
    ++pos_;  // import / using
    Node n;
    n.kind = NodeKind::import_decl;
    if (is_kw("static") || is_ident("static")) {
      n.detail = "static";
      ++pos_;
    }
    if (lang_ == Language::csharp && is_ident() && peek_op(1, "=")) {
      n.detail = cur().text;
      pos_ += 2;
    }
    n.text = guarded([&] { return qualified_name(); });
    if (is_op(".") && peek_op(1, "*")) {
      pos_ += 2;
      n.detail = "*";
    } else if (lang_ == Language::csharp && n.detail.empty()) {
      n.detail = "*";  // `using Ns;` imports a namespace
    }
    while (!at_eof() && !is_op(";")) ++pos_;
    if (is_op(";")) ++pos_;
    n.span = span_from(first);
    return n;
  }

  bool at_modifier(bool in_class) const {
    if (cur().kind == Tok::keyword && kModifiers.count(cur().text)) {
      // `synchronized (x)` is a statement, `const` in Java is reserved only
      if (cur().text == "synchronized" && peek_op(1, "(")) return false;
      return true;
    }
    if (is_ident() && kContextualModifiers.count(cur().text) &&
        (peek().kind == Tok::ident || peek().kind == Tok::keyword))
      return true;
    if (in_class && lang_ == Language::csharp && is_kw("new") &&
        (peek().kind == Tok::ident || peek().kind == Tok::keyword))
      return true;
    if (in_class && lang_ == Language::java && is_kw("default") && !peek_op(1, ":"))
      return true;
    return false;
  }

  Node parse_annotation() {
    std::size_t first = pos_;
    Node n;
    n.kind = NodeKind::opaque;
    if (is_op("@")) {
      ++pos_;
      guarded([&] { return qualified_name(); });
      n.children.push_back(leaf(NodeKind::ident, toks_[pos_ - 1]));
      if (is_op("(")) {
        std::size_t s = pos_;
        skip_balanced();
        for (std::size_t k = s; k < pos_; ++k) append_raw(n, toks_[k]);
      }
    } else {
      std::size_t s = pos_;
      skip_balanced();
      for (std::size_t k = s; k < pos_; ++k) append_raw(n, toks_[k]);
    }
    strip_punct(n);
    n.span = span_from(first);
    return n;
  }

  static void strip_punct(Node& n) {
    std::erase_if(n.children, [](const Node& c) {
      return c.kind == NodeKind::op &&
             (c.text == "(" || c.text == ")" || c.text == "[" || c.text == "]" ||
              c.text == "{" || c.text == "}" || c.text == ";" || c.text == "," || c.text == ".");
    });
  }

  std::optional<Node> parse_member(bool in_class) {
    if (is_op(";")) {
      ++pos_;
      return std::nullopt;
    }
    if (lang_ == Language::java && is_op("@") && !(peek().kind == Tok::keyword && peek().text == "interface"))
      return parse_annotation();
    if (lang_ == Language::csharp && is_op("[")) return parse_annotation();

    std::size_t first = pos_;
    std::vector<Node> mods;
    while (at_modifier(in_class)) mods.push_back(take_leaf(NodeKind::modifier));

    if (is_kw("class") || is_kw("interface") || is_kw("struct") ||
        (is_ident("record") && peek().kind == Tok::ident) ||
        (is_op("@") && peek().text == "interface")) {
      return parse_class(first, std::move(mods));
    }
    if (is_kw("enum")) return parse_enum(first, std::move(mods));

    std::size_t after_mods = pos_;
    if (in_class || !mods.empty()) {
      try {
        if (auto m = try_member_decl(first, mods, in_class)) return m;
      } catch (const Unsupported&) {
      }
      pos_ = after_mods;
    } else {
      try {
        if (auto m = try_member_decl(first, mods, false)) return m;
      } catch (const Unsupported&) {
      }
      pos_ = first;
      return parse_statement();
    }
    pos_ = first;
    return raw_statement(false);
  }

  // Method, constructor, field or property. Returns nullopt (position reset)
  // when the tokens do not start a member declaration.
  std::optional<Node> try_member_decl(std::size_t first, const std::vector<Node>& mods,
                                      bool in_class) {
    std::size_t start = pos_;
    if (is_op("<")) skip_angles();  // generic method type parameters

    // constructor
    if (in_class && is_ident() && cur().text == class_stack_.back() && peek_op(1, "(")) {
      Node fn;
      fn.kind = NodeKind::func_decl;
      fn.detail = "ctor";
      fn.text = cur().text;
      ++pos_;
      fn.children = mods;
      parse_method_rest(fn);
      fn.span = span_from(first);
      return fn;
    }

    auto type = try_parse_type();
    if (!type) {
      pos_ = start;
      return std::nullopt;
    }
    if (!is_ident()) {
      pos_ = start;
      if (in_class) throw Unsupported{};
      return std::nullopt;
    }
    const Token& name = cur();
    bool generic_name = lang_ == Language::csharp && peek_op(1, "<");
    if (peek_op(1, "(") || generic_name) {
      ++pos_;
      if (generic_name) skip_angles();
      if (!is_op("(")) throw Unsupported{};
      Node fn;
      fn.kind = NodeKind::func_decl;
      fn.text = name.text;
      fn.children = mods;
      fn.children.push_back(std::move(*type));
      parse_method_rest(fn);
      fn.span = span_from(first);
      return fn;
    }
    if (lang_ == Language::csharp && (peek_op(1, "{") || peek_op(1, "=>"))) {
      // property
      pos_ = first;
      Node n;
      n.kind = NodeKind::opaque;
      while (!is_op("{") && !is_op("=>")) {
        append_raw(n, cur());
        ++pos_;
      }
      if (is_op("{")) {
        const Token& open = cur();
        ++pos_;
        while (!is_op("}")) {
          if (at_eof()) fail(open, "unbalanced '{'");
          if (is_ident("get") || is_ident("set") || is_ident("init")) {
            append_raw(n, cur());
            ++pos_;
            if (is_op("{")) {
              n.children.push_back(parse_block());
            } else if (is_op("=>")) {
              ++pos_;
              n.children.push_back(raw_statement(false));
            } else if (is_op(";")) {
              ++pos_;
            }
          } else {
            append_raw(n, cur());
            ++pos_;
          }
        }
        ++pos_;
        if (is_op("=")) n.children.push_back(raw_statement(false));
      } else {
        ++pos_;
        n.children.push_back(raw_statement(false));
      }
      strip_punct(n);
      n.span = span_from(first);
      return n;
    }
    if (peek_op(1, "=") || peek_op(1, ";") || peek_op(1, ",") || peek_op(1, "[")) {
      Node stmt;
      stmt.kind = NodeKind::decl_stmt;
      stmt.children = mods;
      parse_declarators(stmt, *type);
      expect_op(";");
      stmt.span = span_from(first);
      return stmt;
    }
    pos_ = start;
    if (in_class) throw Unsupported{};
    return std::nullopt;
  }

  void parse_method_rest(Node& fn) {
    expect_op("(");
    while (!is_op(")")) {
      fn.children.push_back(parse_param());
      if (is_op(",")) ++pos_;
      else if (!is_op(")")) throw Unsupported{};
    }
    ++pos_;
    while (is_op("[")) {
      ++pos_;
      expect_op("]");
    }
    if (is_kw("throws")) {
      ++pos_;
      while (!is_op("{") && !is_op(";") && !at_eof()) ++pos_;
    }
    if (is_op(":")) {  // constructor initializer
      ++pos_;
      while (!is_op("{") && !is_op(";") && !is_op("=>") && !at_eof()) {
        if (is_op("(")) skip_balanced();
        else ++pos_;
      }
    }
    if (is_ident("where")) {
      while (!is_op("{") && !is_op(";") && !is_op("=>") && !at_eof()) ++pos_;
    }
    if (is_op("{")) {
      fn.children.push_back(parse_block());
    } else if (is_op("=>")) {
      std::size_t first = pos_;
      ++pos_;
      Node body;
      body.kind = NodeKind::block;
      Node ret;
      ret.kind = NodeKind::return_stmt;
      ret.children.push_back(wrap_expr(parse_expression()));
      expect_op(";");
      ret.span = span_from(first);
      body.children.push_back(std::move(ret));
      body.span = span_from(first);
      fn.children.push_back(std::move(body));
    } else if (is_op(";")) {
      ++pos_;
    } else if (lang_ == Language::java && is_kw("default")) {
      while (!is_op(";") && !at_eof()) ++pos_;
      if (is_op(";")) ++pos_;
    } else {
      throw Unsupported{};
    }
  }

  Node parse_param() {
    std::size_t first = pos_;
    while (is_op("@") || (lang_ == Language::csharp && is_op("["))) {
      if (is_op("@")) {
        ++pos_;
        qualified_name();
        if (is_op("(")) skip_balanced();
      } else {
        skip_balanced();
      }
    }
    while (is_kw("final") || is_kw("ref") || is_kw("out") || is_kw("in") || is_kw("params") ||
           is_kw("this") || is_kw("readonly"))
      ++pos_;
    auto type = try_parse_type();
    if (!type) throw Unsupported{};
    if (is_op("...")) {
      ++pos_;
      type->text += "[]";
    }
    if (!is_ident()) throw Unsupported{};
    Node decl;
    decl.kind = NodeKind::decl;
    decl.children.push_back(std::move(*type));
    Node& ty = decl.children.back();
    Node name = take_leaf(NodeKind::declarator);
    while (is_op("[")) {
      ++pos_;
      expect_op("]");
      ty.text += "[]";
    }
    decl.children.push_back(std::move(name));
    if (is_op("=")) {  // default value
      ++pos_;
      decl.children.push_back(wrap_expr(parse_expression()));
    }
    decl.span = span_from(first);
    return decl;
  }

  Node parse_class(std::size_t first, std::vector<Node> mods) {
    Node n;
    n.kind = NodeKind::class_decl;
    if (is_op("@")) {
      ++pos_;
      n.detail = "interface";
    } else {
      n.detail = cur().text;
    }
    ++pos_;
    if (!is_ident()) fail(cur(), "expected class name");
    n.text = cur().text;
    ++pos_;
    n.children = std::move(mods);
    guarded([&] {
      if (is_op("<")) skip_angles();
      if (is_op("(")) skip_balanced();  // record components
      while (is_kw("extends") || is_kw("implements") || is_op(":") || is_op(",") ||
             is_ident("permits")) {
        ++pos_;
        if (auto base = try_parse_type()) n.children.push_back(std::move(*base));
        else throw Unsupported{};
      }
      if (is_ident("where"))
        while (!is_op("{") && !at_eof()) ++pos_;
      return 0;
    });
    if (!is_op("{")) fail(cur(), "expected '{' after class header");
    const Token& open = cur();
    ++pos_;
    class_stack_.push_back(n.text);
    while (!is_op("}")) {
      if (at_eof()) fail(open, "unbalanced '{'");
      if (auto m = parse_member(true)) n.children.push_back(std::move(*m));
    }
    class_stack_.pop_back();
    ++pos_;
    if (is_op(";")) ++pos_;
    n.span = span_from(first);
    return n;
  }

  Node parse_enum(std::size_t first, std::vector<Node> mods) {
    Node n;
    n.kind = NodeKind::opaque;
    n.children = std::move(mods);
    n.children.push_back(take_leaf(NodeKind::keyword));
    while (!is_op("{")) {
      if (at_eof()) fail(cur(), "expected enum body");
      append_raw(n, cur());
      ++pos_;
    }
    std::size_t s = pos_;
    skip_balanced();
    for (std::size_t k = s; k < pos_; ++k) append_raw(n, toks_[k]);
    if (is_op(";")) ++pos_;
    strip_punct(n);
    n.span = span_from(first);
    return n;
  }

  // ---- types --------------------------------------------------------------

  std::optional<Node> try_parse_type() {
    std::size_t start = pos_;
    auto fail_type = [&]() -> std::optional<Node> {
      pos_ = start;
      return std::nullopt;
    };
    std::string text;
    if (cur().kind == Tok::keyword && kPrimitiveKeywords.count(cur().text)) {
      text = cur().text;
      ++pos_;
    } else if (is_ident()) {
      text = cur().text;
      ++pos_;
      if (!append_type_args(text)) return fail_type();
      while (is_op(".") && peek().kind == Tok::ident) {
        text += "." + peek().text;
        pos_ += 2;
        if (!append_type_args(text)) return fail_type();
      }
    } else {
      return std::nullopt;
    }
    if (lang_ == Language::csharp && is_op("?") &&
        (peek().kind == Tok::ident || peek_op(1, ">") || peek_op(1, ",") || peek_op(1, "[") ||
         peek_op(1, ")"))) {
      text += "?";
      ++pos_;
    }
    while (is_op("[") && (peek_op(1, "]") || peek_op(1, ","))) {
      ++pos_;
      text += "[";
      while (is_op(",")) {
        text += ",";
        ++pos_;
      }
      if (!is_op("]")) return fail_type();
      ++pos_;
      text += "]";
    }
    Node n;
    n.kind = NodeKind::type_ref;
    n.text = text;
    n.span = span_from(start);
    return n;
  }

  bool append_type_args(std::string& text) {
    if (!is_op("<")) return true;
    std::size_t save = pos_;
    std::string args = "<";
    ++pos_;
    bool first = true;
    while (!is_op(">")) {
      if (!first) {
        if (!is_op(",")) {
          pos_ = save;
          return false;
        }
        args += ",";
        ++pos_;
      }
      first = false;
      if (is_op("?")) {
        ++pos_;
        args += "?";
        if (is_kw("extends") || is_kw("super")) {
          args += cur().text == "extends" ? "+" : "-";
          ++pos_;
        } else {
          continue;
        }
      }
      auto inner = try_parse_type();
      if (!inner) {
        pos_ = save;
        return false;
      }
      args += inner->text;
    }
    ++pos_;
    text += args + ">";
    return true;
  }

  // ---- statements ---------------------------------------------------------

  Node parse_block() {
    std::size_t first = pos_;
    const Token& open = cur();
    if (!is_op("{")) throw Unsupported{};
    ++pos_;
    Node n;
    n.kind = NodeKind::block;
    while (!is_op("}")) {
      if (at_eof()) fail(open, "unbalanced '{'");
      if (auto s = parse_statement()) n.children.push_back(std::move(*s));
    }
    ++pos_;
    n.span = span_from(first);
    return n;
  }

  std::optional<Node> parse_statement() {
    std::size_t first = pos_;
    try {
      return parse_statement_structured();
    } catch (const Unsupported&) {
      pos_ = first;
      return raw_statement(true);
    }
  }

  // Body of if/loop/etc. Always yields a node (empty statements become an
  // empty block).
  Node parse_body() {
    std::size_t first = pos_;
    if (auto s = parse_statement()) return std::move(*s);
    Node n;
    n.kind = NodeKind::block;
    n.span = span_from(first);
    return n;
  }

  std::optional<Node> parse_statement_structured() {
    std::size_t first = pos_;
    if (is_op("{")) return parse_block();
    if (is_op(";")) {
      ++pos_;
      return std::nullopt;
    }
    if (is_op("}")) throw Unsupported{};
    if (is_kw("if")) {
      ++pos_;
      Node n;
      n.kind = NodeKind::if_stmt;
      n.children.push_back(paren_expr());
      n.children.push_back(parse_body());
      if (is_kw("else")) {
        n.children.push_back(take_leaf(NodeKind::keyword));
        n.children.push_back(parse_body());
      }
      n.span = span_from(first);
      return n;
    }
    if (is_kw("while")) {
      ++pos_;
      Node n;
      n.kind = NodeKind::loop;
      n.children.push_back(paren_expr());
      n.children.push_back(parse_body());
      n.span = span_from(first);
      return n;
    }
    if (is_kw("do")) {
      ++pos_;
      Node n;
      n.kind = NodeKind::loop;
      n.children.push_back(parse_body());
      if (!is_kw("while")) throw Unsupported{};
      ++pos_;
      n.children.push_back(paren_expr());
      expect_op(";");
      n.span = span_from(first);
      return n;
    }
    if (is_kw("for") || is_kw("foreach")) return parse_for(first);
    if (is_kw("return")) {
      ++pos_;
      Node n;
      n.kind = NodeKind::return_stmt;
      if (!is_op(";")) n.children.push_back(wrap_expr(parse_expression()));
      expect_op(";");
      n.span = span_from(first);
      return n;
    }
    if (is_kw("throw")) {
      Node n = opaque_stmt();
      if (!is_op(";")) n.children.push_back(wrap_expr(parse_expression()));
      expect_op(";");
      n.span = span_from(first);
      return n;
    }
    if (is_kw("break") || is_kw("continue")) {
      Node n = opaque_stmt();
      if (is_ident()) ++pos_;
      expect_op(";");
      n.span = span_from(first);
      return n;
    }
    if (is_kw("try")) return parse_try(first);
    if (is_kw("switch")) return parse_switch(first);
    if ((is_kw("synchronized") || is_kw("lock") || is_kw("using") || is_kw("fixed")) &&
        peek_op(1, "(")) {
      Node n = opaque_stmt();
      ++pos_;
      if (auto d = try_local_decl(pos_, {}, /*need_semicolon=*/false)) {
        n.children.push_back(std::move(*d));
      } else {
        n.children.push_back(wrap_expr(parse_expression()));
      }
      expect_op(")");
      n.children.push_back(parse_body());
      n.span = span_from(first);
      return n;
    }
    if ((is_kw("checked") || is_kw("unchecked") || is_kw("unsafe")) && peek_op(1, "{")) {
      Node n = opaque_stmt();
      n.children.push_back(parse_block());
      n.span = span_from(first);
      return n;
    }
    if (is_ident() && peek_op(1, ":") && !peek_op(2, ":")) {  // label
      pos_ += 2;
      return parse_statement_structured();
    }
    if (is_kw("class") || is_kw("interface") || is_kw("enum")) throw Unsupported{};

    // local declaration
    std::vector<Node> mods;
    while (is_kw("final") || is_kw("const") || is_kw("static") || is_kw("readonly"))
      mods.push_back(take_leaf(NodeKind::modifier));
    if (auto d = try_local_decl(first, std::move(mods), true)) return d;
    pos_ = first;

    Node n;
    n.kind = NodeKind::expr_stmt;
    n.children.push_back(wrap_expr(parse_expression()));
    expect_op(";");
    n.span = span_from(first);
    return n;
  }

  Node opaque_stmt() {
    Node n;
    n.kind = NodeKind::opaque;
    n.detail = "stmt";
    n.children.push_back(take_leaf(NodeKind::keyword));
    return n;
  }

  std::optional<Node> try_local_decl(std::size_t first, std::vector<Node> mods,
                                     bool need_semicolon) {
    std::size_t start = pos_;
    auto type = try_parse_type();
    if (!type || !is_ident() ||
        !(peek_op(1, "=") || peek_op(1, ";") || peek_op(1, ",") || peek_op(1, "[") ||
          (!need_semicolon && peek_op(1, ")")))) {
      pos_ = start;
      return std::nullopt;
    }
    Node stmt;
    stmt.kind = NodeKind::decl_stmt;
    stmt.children = std::move(mods);
    parse_declarators(stmt, *type);
    if (need_semicolon) expect_op(";");
    stmt.span = span_from(first);
    return stmt;
  }

  void parse_declarators(Node& stmt, const Node& type) {
    while (true) {
      Node decl;
      decl.kind = NodeKind::decl;
      decl.children.push_back(type);
      Node& ty = decl.children.back();
      if (!is_ident()) throw Unsupported{};
      Node name = take_leaf(NodeKind::declarator);
      while (is_op("[")) {
        ++pos_;
        expect_op("]");
        ty.text += "[]";
      }
      decl.children.push_back(std::move(name));
      if (is_op("=")) {
        ++pos_;
        if (is_op("{")) decl.children.push_back(wrap_expr(parse_array_init()));
        else decl.children.push_back(wrap_expr(parse_expression()));
      }
      decl.span = {type.span.begin, toks_[pos_ - 1].end};
      stmt.children.push_back(std::move(decl));
      if (!is_op(",")) break;
      ++pos_;
    }
  }

  Node paren_expr() {
    expect_op("(");
    Node e = wrap_expr(parse_expression());
    expect_op(")");
    return e;
  }

  Node parse_for(std::size_t first) {
    ++pos_;
    expect_op("(");
    Node n;
    n.kind = NodeKind::loop;
    // for-each: `T x : e` (Java) / `T x in e` (C#)
    {
      std::size_t save = pos_;
      while (is_kw("final")) ++pos_;
      auto type = try_parse_type();
      if (type && is_ident() &&
          ((lang_ == Language::java && peek_op(1, ":")) ||
           (lang_ == Language::csharp && peek().kind == Tok::keyword && peek().text == "in"))) {
        Node decl;
        decl.kind = NodeKind::decl;
        decl.span = {type->span.begin, cur().end};
        decl.children.push_back(std::move(*type));
        decl.children.push_back(take_leaf(NodeKind::declarator));
        n.children.push_back(std::move(decl));
        ++pos_;
        n.children.push_back(wrap_expr(parse_expression()));
        expect_op(")");
        n.children.push_back(parse_body());
        n.span = span_from(first);
        return n;
      }
      pos_ = save;
    }
    if (!is_op(";")) {
      std::size_t init_first = pos_;
      std::vector<Node> mods;
      while (is_kw("final")) mods.push_back(take_leaf(NodeKind::modifier));
      if (auto d = try_local_decl(init_first, std::move(mods), false)) {
        n.children.push_back(std::move(*d));
      } else {
        pos_ = init_first;
        while (true) {
          n.children.push_back(wrap_expr(parse_expression()));
          if (!is_op(",")) break;
          ++pos_;
        }
      }
    }
    expect_op(";");
    if (!is_op(";")) n.children.push_back(wrap_expr(parse_expression()));
    expect_op(";");
    while (!is_op(")")) {
      n.children.push_back(wrap_expr(parse_expression()));
      if (is_op(",")) ++pos_;
      else if (!is_op(")")) throw Unsupported{};
    }
    ++pos_;
    n.children.push_back(parse_body());
    n.span = span_from(first);
    return n;
  }

  Node parse_try(std::size_t first) {
    Node n = opaque_stmt();
    if (is_op("(")) {  // resources
      ++pos_;
      while (!is_op(")")) {
        std::size_t s = pos_;
        if (auto d = try_local_decl(s, {}, false)) n.children.push_back(std::move(*d));
        else n.children.push_back(wrap_expr(parse_expression()));
        if (is_op(";")) ++pos_;
        else if (!is_op(")")) throw Unsupported{};
      }
      ++pos_;
    }
    n.children.push_back(parse_block());
    while (is_kw("catch")) {
      n.children.push_back(take_leaf(NodeKind::keyword));
      if (is_op("(")) {
        ++pos_;
        while (is_kw("final")) ++pos_;
        auto type = try_parse_type();
        if (!type) throw Unsupported{};
        n.children.push_back(std::move(*type));
        while (is_op("|")) {
          ++pos_;
          auto alt = try_parse_type();
          if (!alt) throw Unsupported{};
          n.children.push_back(std::move(*alt));
        }
        if (is_ident()) n.children.push_back(take_leaf(NodeKind::declarator));
        expect_op(")");
      }
      if (is_ident("when")) {
        ++pos_;
        n.children.push_back(paren_expr());
      }
      n.children.push_back(parse_block());
    }
    if (is_kw("finally")) {
      n.children.push_back(take_leaf(NodeKind::keyword));
      n.children.push_back(parse_block());
    }
    n.span = span_from(first);
    return n;
  }

  Node parse_switch(std::size_t first) {
    Node n = opaque_stmt();
    n.children.push_back(paren_expr());
    if (!is_op("{")) throw Unsupported{};
    const Token& open = cur();
    ++pos_;
    while (!is_op("}")) {
      if (at_eof()) fail(open, "unbalanced '{'");
      if (is_kw("case")) {
        n.children.push_back(take_leaf(NodeKind::keyword));
        n.children.push_back(wrap_expr(parse_expression()));
        if (!is_op(":")) throw Unsupported{};
        ++pos_;
      } else if (is_kw("default") && peek_op(1, ":")) {
        n.children.push_back(take_leaf(NodeKind::keyword));
        ++pos_;
      } else if (auto s = parse_statement()) {
        n.children.push_back(std::move(*s));
      }
    }
    ++pos_;
    n.span = span_from(first);
    return n;
  }

  // ---- expressions --------------------------------------------------------

  Node wrap_expr(Node inner) {
    Node e;
    e.kind = NodeKind::expr;
    e.span = inner.span;
    e.children.push_back(std::move(inner));
    return e;
  }

  Node literal_leaf(const Token& t) const {
    Node n;
    n.kind = NodeKind::literal;
    n.span = {t.begin, t.end};
    n.detail = t.text;
    switch (t.kind) {
      case Tok::string: n.text = "string"; break;
      case Tok::chr: n.text = "char"; break;
      case Tok::number: n.text = "number"; break;
      case Tok::boolean: n.text = "boolean"; break;
      default: n.text = "null"; break;
    }
    return n;
  }

  // Reads a binary operator at the cursor, reassembling `>>`, `>>>`, `>>=`
  // from adjacent `>` tokens. Returns the operator text and its token count.
  std::pair<std::string, std::size_t> read_binary_op() const {
    const Token& t = cur();
    if (t.kind == Tok::keyword && (t.text == "instanceof" || t.text == "is" || t.text == "as"))
      return {t.text, 1};
    if (t.kind != Tok::op) return {"", 0};
    if (t.text == ">") {
      std::string op = ">";
      std::size_t n = 1;
      std::uint32_t end = t.end;
      while (n < 3 && peek(n).kind == Tok::op && peek(n).begin == end &&
             (peek(n).text == ">" || peek(n).text == ">=")) {
        op += peek(n).text;
        end = peek(n).end;
        ++n;
        if (op.back() == '=') break;
      }
      return {op, n};
    }
    return {t.text, 1};
  }

  Node parse_expression(int min_prec = 1) {
    std::size_t first = pos_;
    Node lhs = parse_unary();
    while (true) {
      auto [op, ntok] = read_binary_op();
      if (ntok == 0) break;
      auto info = binary_op(op);
      if (!info || info->prec < min_prec) break;
      Node opn = leaf(NodeKind::op, cur());
      opn.text = op;
      opn.span.end = toks_[pos_ + ntok - 1].end;
      pos_ += ntok;
      if (op == "?") {
        Node n;
        n.kind = NodeKind::conditional;
        n.children.push_back(std::move(lhs));
        n.children.push_back(std::move(opn));
        n.children.push_back(parse_expression(1));
        expect_op(":");
        n.children.push_back(parse_expression(info->prec));
        n.span = span_from(first);
        lhs = std::move(n);
        continue;
      }
      Node n;
      n.kind = NodeKind::binary;
      n.children.push_back(std::move(lhs));
      n.children.push_back(std::move(opn));
      if (op == "instanceof" || op == "is" || op == "as") {
        auto type = try_parse_type();
        if (type) {
          n.children.push_back(std::move(*type));
          if (is_ident() && !binary_op(cur().text)) ++pos_;  // pattern variable
        } else {
          n.children.push_back(parse_expression(info->prec + 1));
        }
      } else {
        n.children.push_back(parse_expression(info->right ? info->prec : info->prec + 1));
      }
      n.span = span_from(first);
      lhs = std::move(n);
    }
    return lhs;
  }

  Node parse_unary() {
    std::size_t first = pos_;
    if (cur().kind == Tok::op &&
        (cur().text == "+" || cur().text == "-" || cur().text == "!" || cur().text == "~" ||
         cur().text == "++" || cur().text == "--")) {
      Node n;
      n.kind = NodeKind::unary;
      n.children.push_back(take_leaf(NodeKind::op));
      n.children.push_back(parse_unary());
      n.span = span_from(first);
      return n;
    }
    if (is_op("(")) {
      if (auto c = try_cast()) return std::move(*c);
    }
    return parse_postfix(parse_primary());
  }

  std::optional<Node> try_cast() {
    std::size_t first = pos_;
    ++pos_;
    auto type = try_parse_type();
    if (!type || !is_op(")")) {
      pos_ = first;
      return std::nullopt;
    }
    ++pos_;
    bool primitive = kPrimitiveKeywords.count(type->text) > 0;
    const Token& t = cur();
    bool operand_start = t.kind == Tok::ident || t.kind == Tok::number || t.kind == Tok::string ||
                         t.kind == Tok::chr || t.kind == Tok::boolean || t.kind == Tok::null ||
                         (t.kind == Tok::keyword && (t.text == "this" || t.text == "new" ||
                                                     t.text == "super" || t.text == "base")) ||
                         (t.kind == Tok::op && (t.text == "(" || t.text == "!" || t.text == "~"));
    if (primitive && t.kind == Tok::op && (t.text == "-" || t.text == "+")) operand_start = true;
    if (!operand_start) {
      pos_ = first;
      return std::nullopt;
    }
    Node n;
    n.kind = NodeKind::cast;
    n.children.push_back(std::move(*type));
    n.children.push_back(parse_unary());
    n.span = span_from(first);
    return n;
  }

  Node parse_arguments(Node& call) {
    expect_op("(");
    while (!is_op(")")) {
      std::size_t first = pos_;
      Node arg;
      arg.kind = NodeKind::argument;
      if (is_ident() && peek_op(1, ":") && lang_ == Language::csharp) pos_ += 2;  // named
      if (is_kw("ref") || is_kw("out") || is_kw("in")) {
        arg.children.push_back(take_leaf(NodeKind::keyword));
        if (is_ident("var") && peek().kind == Tok::ident) ++pos_;
      }
      arg.children.push_back(parse_expression());
      arg.span = span_from(first);
      call.children.push_back(std::move(arg));
      if (is_op(",")) ++pos_;
      else if (!is_op(")")) throw Unsupported{};
    }
    ++pos_;
    return call;
  }

  Node parse_array_init() {
    std::size_t first = pos_;
    expect_op("{");
    Node n;
    n.kind = NodeKind::array_init;
    while (!is_op("}")) {
      if (is_op("{")) n.children.push_back(parse_array_init());
      else n.children.push_back(parse_expression());
      if (is_op(",")) ++pos_;
      else if (!is_op("}")) throw Unsupported{};
    }
    ++pos_;
    n.span = span_from(first);
    return n;
  }

  bool chain_head() const {
    if (is_ident()) return true;
    if (cur().kind != Tok::keyword) return false;
    const auto& t = cur().text;
    return t == "this" || t == "super" || t == "base" ||
           (kPrimitiveKeywords.count(t) && peek_op(1, "."));
  }

  Node parse_primary() {
    std::size_t first = pos_;
    const Token& t = cur();
    switch (t.kind) {
      case Tok::number:
      case Tok::string:
      case Tok::chr:
      case Tok::boolean:
      case Tok::null: {
        ++pos_;
        return literal_leaf(t);
      }
      default: break;
    }
    if (is_op("(")) {
      ++pos_;
      Node inner = parse_expression();
      expect_op(")");
      if (is_op("->") || is_op("=>")) throw Unsupported{};
      return inner;
    }
    if (is_kw("new")) return parse_new();
    if (is_kw("typeof") || is_kw("sizeof") || is_ident("nameof") ||
        (is_kw("default") && peek_op(1, "("))) {
      Node n;
      n.kind = NodeKind::opaque;
      n.children.push_back(leaf(NodeKind::keyword, cur()));
      ++pos_;
      expect_op("(");
      if (auto type = try_parse_type(); type && is_op(")")) {
        n.children.push_back(std::move(*type));
      } else {
        n.children.push_back(parse_expression());
      }
      expect_op(")");
      n.span = span_from(first);
      return n;
    }
    if (is_kw("default")) return take_leaf(NodeKind::keyword);
    if (chain_head()) {
      if (is_ident() && (peek_op(1, "->") || peek_op(1, "=>"))) throw Unsupported{};
      std::string chain = cur().text;
      ++pos_;
      while ((is_op(".") || is_op("?.")) && peek().kind == Tok::ident) {
        chain += "." + peek().text;
        pos_ += 2;
      }
      if (is_op("(")) {
        Node call;
        call.kind = NodeKind::func_call;
        auto dot = chain.rfind('.');
        Node callee;
        callee.kind = NodeKind::callee;
        if (dot == std::string::npos) {
          call.text = chain;
        } else {
          call.text = chain.substr(dot + 1);
          Node recv;
          recv.kind = NodeKind::name_ref;
          recv.text = chain.substr(0, dot);
          recv.span = {toks_[first].begin, toks_[pos_ - 2].end};
          callee.children.push_back(std::move(recv));
        }
        callee.span = span_from(first);
        call.children.push_back(std::move(callee));
        parse_arguments(call);
        call.span = span_from(first);
        return call;
      }
      Node n;
      n.kind = NodeKind::name_ref;
      n.text = chain;
      n.span = span_from(first);
      return n;
    }
    throw Unsupported{};
  }

  Node parse_new() {
    std::size_t first = pos_;
    ++pos_;
    auto type = try_parse_type();
    if (!type) throw Unsupported{};
    if (is_op("[")) {
      Node n;
      n.kind = NodeKind::new_array;
      std::string dims;
      while (is_op("[")) {
        ++pos_;
        if (!is_op("]")) n.children.push_back(parse_expression());
        expect_op("]");
        dims += "[]";
      }
      type->text += dims;
      n.children.insert(n.children.begin(), std::move(*type));
      if (is_op("{")) n.children.push_back(parse_array_init());
      n.span = span_from(first);
      return n;
    }
    if (type->text.ends_with("[]")) {  // new int[] {1, 2}
      Node n;
      n.kind = NodeKind::new_array;
      n.children.push_back(std::move(*type));
      if (is_op("{")) n.children.push_back(parse_array_init());
      n.span = span_from(first);
      return n;
    }
    Node n;
    n.kind = NodeKind::new_obj;
    n.children.push_back(std::move(*type));
    parse_arguments(n);
    if (is_op("{")) {
      if (lang_ == Language::java) skip_balanced();  // anonymous class body
      else n.children.push_back(parse_array_init());  // object/collection initializer
    }
    n.span = span_from(first);
    return n;
  }

  Node parse_postfix(Node expr) {
    while (true) {
      if ((is_op(".") || is_op("?.")) && peek().kind == Tok::ident) {
        std::uint32_t begin = expr.span.begin;
        const Token& name = peek();
        pos_ += 2;
        if (is_op("(")) {
          Node call;
          call.kind = NodeKind::func_call;
          call.text = name.text;
          Node callee;
          callee.kind = NodeKind::callee;
          callee.span = {begin, name.end};
          callee.children.push_back(std::move(expr));
          call.children.push_back(std::move(callee));
          parse_arguments(call);
          call.span = {begin, toks_[pos_ - 1].end};
          expr = std::move(call);
        } else {
          Node m;
          m.kind = NodeKind::member;
          m.text = name.text;
          m.children.push_back(std::move(expr));
          m.span = {begin, name.end};
          expr = std::move(m);
        }
      } else if (is_op("[")) {
        std::uint32_t begin = expr.span.begin;
        Node n;
        n.kind = NodeKind::index;
        n.children.push_back(std::move(expr));
        Node op = leaf(NodeKind::op, cur());
        op.text = "[]";
        n.children.push_back(std::move(op));
        ++pos_;
        n.children.push_back(parse_expression());
        expect_op("]");
        n.span = {begin, toks_[pos_ - 1].end};
        expr = std::move(n);
      } else if (is_op("++") || is_op("--")) {
        std::uint32_t begin = expr.span.begin;
        Node n;
        n.kind = NodeKind::unary;
        n.children.push_back(std::move(expr));
        n.children.push_back(take_leaf(NodeKind::op));
        n.span = {begin, toks_[pos_ - 1].end};
        expr = std::move(n);
      } else if (lang_ == Language::csharp && is_op("!") &&
                 (peek_op(1, ".") || peek_op(1, ")") || peek_op(1, ";"))) {
        ++pos_;  // null-forgiving
      } else if (is_op("(") || is_op("::") || is_op("->") || is_op("=>")) {
        throw Unsupported{};
      } else {
        return expr;
      }
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Language lang_;
  const std::string& file_;
  std::size_t size_;
  std::vector<std::string> class_stack_{""};
};

}  // namespace

SyntaxTree parse(std::string_view source, Language language, const std::string& file_name) {
  auto toks = detail::lex(source, language, file_name);
  Parser p(std::move(toks), language, file_name, source.size());
  SyntaxTree tree;
  tree.language = language;
  tree.root = p.parse_unit();
  return tree;
}

}  // namespace codemap::syntax

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codemap::syntax {

enum class Language { java, csharp };

Language parse_language(std::string_view id);
std::string_view language_name(Language lang);

// Half-open byte range [begin, end) into the source text.
struct Span {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  bool empty() const { return begin == end; }
  bool contains(const Span& other) const { return begin <= other.begin && other.end <= end; }
  friend bool operator==(const Span&, const Span&) = default;
};

// Node kinds. The first group carries a structural keyword in the enriched
// stream; the rest are structural glue that only emits its leaves.
enum class NodeKind : std::uint8_t {
  unit,
  package_decl,
  import_decl,
  class_decl,
  func_decl,
  decl_stmt,
  decl,
  expr_stmt,
  expr,
  func_call,
  new_obj,
  argument,
  literal,
  if_stmt,
  loop,
  return_stmt,
  block,
  opaque,
  // glue
  modifier,
  type_ref,
  declarator,
  name_ref,
  member,
  op,
  keyword,
  ident,
  binary,
  unary,
  conditional,
  cast,
  index,
  array_init,
  new_array,
  callee,
};

std::string_view node_kind_name(NodeKind kind);

// Structural keyword emitted before a construct, empty when the kind emits none.
std::string_view structural_keyword(NodeKind kind);

// Per-kind payload:
//   literal     text = literal kind (string|char|number|boolean|null), detail = lexeme
//   type_ref    text = type as written, whitespace removed (e.g. "List<String>")
//   declarator  text = declared name
//   name_ref    text = dotted name chain ("lexer", "System.out", "this.count")
//   member      text = member name; child 0 = receiver expression
//   func_call   text = method name; child 0 = callee (empty, or the receiver); rest = arguments
//   new_obj     child 0 = type_ref; rest = arguments
//   class_decl  text = simple name, detail = class|interface|struct|enum
//   func_decl   text = name, detail = "ctor" for constructors
//   import_decl text = qualified name, detail = alias, "*" (namespace import) or "static"
//   package_decl text = qualified name
//   opaque      detail = "stmt" when it stands in statement position
struct Node {
  NodeKind kind = NodeKind::unit;
  Span span;
  std::string text;
  std::string detail;
  std::vector<Node> children;
};

struct SyntaxTree {
  Language language = Language::java;
  Node root;
};

// Parses the supported subset. Unsupported constructs become `opaque` nodes
// that keep their identifier, keyword and literal tokens. Throws ParseError
// (line/column) on unterminated literals/comments or unbalanced brackets.
SyntaxTree parse(std::string_view source, Language language, const std::string& file_name = {});

// File-local symbol environment for signature resolution.
class SymbolTable {
 public:
  explicit SymbolTable(Language language = Language::java);

  Language language() const { return language_; }

  std::string package;
  // Qualified name of the class whose body is being normalized (empty at top level).
  std::string current_class;
  // Qualified name of current_class's first base type, when known.
  std::string current_base;

  void add_import(const std::string& simple, const std::string& qualified);
  void add_namespace_import(const std::string& ns);

  void push_scope();
  void pop_scope();
  // Declares in the innermost scope; `type` is an already-resolved type token.
  void declare(const std::string& name, const std::string& type);

  std::optional<std::string> lookup_variable(const std::string& name) const;
  // Simple type name -> qualified name via explicit imports, namespace imports
  // (through the built-in SDK catalog) and implicit language imports.
  std::optional<std::string> lookup_type(const std::string& simple) const;

  std::size_t scope_depth() const { return scopes_.size(); }

 private:
  Language language_;
  std::map<std::string, std::string> imports_;
  std::vector<std::string> namespaces_;
  std::vector<std::map<std::string, std::string>> scopes_;
};

// Resolves a dotted name (optionally with a trailing "(...)" suffix that is
// kept verbatim) to its qualified signature. The head resolves through
// variables, then types, then `this`/`super`; an unresolvable single name
// gets the `unk.` prefix; an unresolvable multi-part name is taken as
// already qualified.
std::string resolve_signature(const std::string& name, const SymbolTable& symbols);

// Canonical spelling for primitive types (boolean -> bool, ...), or nullopt
// when `type` is not one of int/long/float/double/bool/char/byte/short.
std::optional<std::string> canonical_primitive(std::string_view type);

enum class TokenKind : std::uint8_t {
  struct_kw,
  signature,
  primitive_placeholder,
  keyword,
  literal_kind,
};

std::string_view token_kind_name(TokenKind kind);

struct EnrichedToken {
  std::string text;
  TokenKind kind = TokenKind::keyword;
  Span span;  // empty for inserted structural keywords

  friend bool operator==(const EnrichedToken&, const EnrichedToken&) = default;
};

struct EnrichedTokenStream {
  std::filesystem::path file;
  Language language = Language::java;
  std::vector<EnrichedToken> tokens;

  std::vector<std::string> texts() const;
  // Tokens with structural keywords filtered out (the signature view).
  std::vector<std::string> signature_tokens() const;
};

// Pre-order token emission. `symbols` is the outer environment; the file's
// own package, imports, classes and declarations are layered on top of a copy.
EnrichedTokenStream normalize(const SyntaxTree& tree, const SymbolTable& symbols,
                              const std::filesystem::path& file = {});
EnrichedTokenStream normalize(const SyntaxTree& tree, const std::filesystem::path& file = {});

enum class Granularity : std::uint8_t { expression, statement, method };

std::string_view granularity_name(Granularity g);
Granularity parse_granularity(std::string_view name);

struct CodeElement {
  Granularity granularity = Granularity::expression;
  Span span;
  std::vector<std::size_t> token_indices;
  std::string label;

  friend bool operator==(const CodeElement&, const CodeElement&) = default;
};

// One element per `expr`, statement and method node, in pre-order. Throws
// ArgumentError when `stream` was not produced from `tree`.
std::vector<CodeElement> extract_elements(const SyntaxTree& tree, const EnrichedTokenStream& stream);

// Stream file: `#<language> <path>` then the space-separated token texts.
std::string format_stream(const EnrichedTokenStream& stream);
// Token kinds and spans are not persisted; parsed tokens get empty spans and
// a kind recovered from their text.
EnrichedTokenStream parse_stream(std::string_view text, const std::string& source = {});

// Element file: TSV `granularity start end first_token_idx last_token_idx label`.
std::string format_elements(const std::vector<CodeElement>& elements);
std::vector<CodeElement> parse_elements(std::string_view text, const std::string& source = {});

}  // namespace codemap::syntax

#include "lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "codemap/error.hpp"

namespace codemap::syntax::detail {

namespace {

const std::unordered_set<std::string_view>& java_keywords() {
  static const std::unordered_set<std::string_view> kw{
      "abstract", "assert",     "boolean",  "break",     "byte",       "case",
      "catch",    "char",       "class",    "const",     "continue",   "default",
      "do",       "double",     "else",     "enum",      "extends",    "final",
      "finally",  "float",      "for",      "goto",      "if",         "implements",
      "import",   "instanceof", "int",      "interface", "long",       "native",
      "new",      "package",    "private",  "protected", "public",     "return",
      "short",    "static",     "strictfp", "super",     "switch",     "synchronized",
      "this",     "throw",      "throws",   "transient", "try",        "void",
      "volatile", "while"};
  return kw;
}

const std::unordered_set<std::string_view>& csharp_keywords() {
  static const std::unordered_set<std::string_view> kw{
      "abstract",  "as",        "base",     "bool",      "break",     "byte",     "case",
      "catch",     "char",      "checked",  "class",     "const",     "continue", "decimal",
      "default",   "delegate",  "do",       "double",    "else",      "enum",     "event",
      "explicit",  "extern",    "finally",  "fixed",     "float",     "for",      "foreach",
      "goto",      "if",        "implicit", "in",        "int",       "interface", "internal",
      "is",        "lock",      "long",     "namespace", "new",       "object",   "operator",
      "out",       "override",  "params",   "private",   "protected", "public",   "readonly",
      "ref",       "return",    "sbyte",    "sealed",    "short",     "sizeof",   "stackalloc",
      "static",    "string",    "struct",   "switch",    "this",      "throw",    "try",
      "typeof",    "uint",      "ulong",    "unchecked", "unsafe",    "ushort",   "using",
      "virtual",   "void",      "volatile", "while"};
  return kw;
}

// Longest-match operator table; `>` deliberately absent from multi-char entries
// except `>=`.
constexpr std::array<std::string_view, 40> kOperators{
    "<<=", "...", "?\?=", "->", "=>", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "<<", "?.", "??", "{",  "}",  "(",
    ")",   "[",   "]",   ";",  ",",  ".",  "=",  "<",  "+",  "-",  "*",  "/"};
constexpr std::string_view kSingleOps = "%&|^!~?:>@";

class Lexer {
 public:
  Lexer(std::string_view src, Language lang, const std::string& file)
      : src_(src), lang_(lang), file_(file) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_trivia();
      if (pos_ >= src_.size()) break;
      out.push_back(next());
    }
    Token eof;
    eof.kind = Tok::eof;
    eof.begin = eof.end = static_cast<std::uint32_t>(src_.size());
    eof.line = line_;
    eof.column = col();
    out.push_back(eof);
    return out;
  }

 private:
  int col() const { return static_cast<int>(pos_ - line_start_) + 1; }

  [[noreturn]] void fail(int line, int column, const std::string& msg) const {
    throw ParseError(file_, line, column, msg);
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      line_start_ = pos_ + 1;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '/' && peek(1) == '*') {
        int l = line_, cl = col();
        advance();
        advance();
        while (pos_ < src_.size() && !(src_[pos_] == '*' && peek(1) == '/')) advance();
        if (pos_ >= src_.size()) fail(l, cl, "unterminated comment");
        advance();
        advance();
      } else if (c == '#' && lang_ == Language::csharp && at_line_start()) {
        // preprocessor directive
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  bool at_line_start() const {
    for (std::size_t i = line_start_; i < pos_; ++i)
      if (!std::isspace(static_cast<unsigned char>(src_[i]))) return false;
    return true;
  }

  char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  Token make(Tok kind, std::size_t begin, int line, int column) {
    Token t;
    t.kind = kind;
    t.begin = static_cast<std::uint32_t>(begin);
    t.end = static_cast<std::uint32_t>(pos_);
    t.text = std::string(src_.substr(begin, pos_ - begin));
    t.line = line;
    t.column = column;
    return t;
  }

  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
           static_cast<unsigned char>(c) >= 0x80;
  }
  static bool ident_char(char c) {
    return ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
  }

  Token next() {
    std::size_t begin = pos_;
    int line = line_, column = col();
    char c = src_[pos_];

    if (lang_ == Language::csharp && (c == '@' || c == '$') && (peek(1) == '"' ||
        ((peek(1) == '@' || peek(1) == '$') && peek(2) == '"'))) {
      bool verbatim = c == '@' || peek(1) == '@';
      while (src_[pos_] != '"') advance();
      read_quoted('"', verbatim, line, column);
      return make(Tok::string, begin, line, column);
    }
    if (lang_ == Language::csharp && c == '@' && ident_start(peek(1))) {
      advance();  // @identifier escapes a keyword
      while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
      auto t = make(Tok::ident, begin, line, column);
      t.text.erase(0, 1);
      return t;
    }
    if (ident_start(c)) {
      while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
      auto t = make(Tok::ident, begin, line, column);
      if (t.text == "true" || t.text == "false") t.kind = Tok::boolean;
      else if (t.text == "null") t.kind = Tok::null;
      else if (is_keyword(t.text, lang_)) t.kind = Tok::keyword;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      read_number();
      return make(Tok::number, begin, line, column);
    }
    if (c == '"') {
      if (lang_ == Language::java && peek(1) == '"' && peek(2) == '"') {
        read_text_block(line, column);
      } else {
        read_quoted('"', false, line, column);
      }
      return make(Tok::string, begin, line, column);
    }
    if (c == '\'') {
      read_quoted('\'', false, line, column);
      return make(Tok::chr, begin, line, column);
    }
    for (auto op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        for (std::size_t k = 0; k < op.size(); ++k) advance();
        return make(Tok::op, begin, line, column);
      }
    }
    if (kSingleOps.find(c) != std::string_view::npos) {
      advance();
      return make(Tok::op, begin, line, column);
    }
    fail(line, column, std::string("unexpected character '") + c + "'");
  }

  void read_number() {
    if (src_[pos_] == '0' && (peek(1) == 'x' || peek(1) == 'X' || peek(1) == 'b' || peek(1) == 'B')) {
      advance();
      advance();
      while (pos_ < src_.size() &&
             (std::isxdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        advance();
    } else {
      while (pos_ < src_.size()) {
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '_') {
          advance();
        } else if (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
          advance();
        } else if ((c == 'e' || c == 'E') &&
                   (std::isdigit(static_cast<unsigned char>(peek(1))) ||
                    ((peek(1) == '+' || peek(1) == '-') &&
                     std::isdigit(static_cast<unsigned char>(peek(2)))))) {
          advance();
          advance();
        } else {
          break;
        }
      }
    }
    while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  void read_quoted(char quote, bool verbatim, int line, int column) {
    advance();
    while (true) {
      if (pos_ >= src_.size()) fail(line, column, "unterminated literal");
      char c = src_[pos_];
      if (!verbatim && c == '\n') fail(line, column, "unterminated literal");
      if (!verbatim && c == '\\') {
        advance();
        if (pos_ < src_.size()) advance();
        continue;
      }
      if (c == quote) {
        advance();
        if (verbatim && pos_ < src_.size() && src_[pos_] == quote) {
          advance();
          continue;
        }
        return;
      }
      advance();
    }
  }

  void read_text_block(int line, int column) {
    for (int k = 0; k < 3; ++k) advance();
    while (true) {
      if (pos_ + 2 >= src_.size() + 0 && pos_ >= src_.size()) fail(line, column, "unterminated text block");
      if (src_.substr(pos_, 3) == "\"\"\"") {
        for (int k = 0; k < 3; ++k) advance();
        return;
      }
      if (src_[pos_] == '\\') advance();
      if (pos_ >= src_.size()) fail(line, column, "unterminated text block");
      advance();
    }
  }

  std::string_view src_;
  Language lang_;
  const std::string& file_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  int line_ = 1;
};

}  // namespace

bool is_keyword(std::string_view word, Language language) {
  return language == Language::java ? java_keywords().count(word) > 0
                                    : csharp_keywords().count(word) > 0;
}

std::vector<Token> lex(std::string_view source, Language language, const std::string& file_name) {
  return Lexer(source, language, file_name).run();
}

}  // namespace codemap::syntax::detail

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "codemap/syntax.hpp"

namespace codemap::syntax::detail {

enum class Tok : std::uint8_t { ident, keyword, number, string, chr, boolean, null, op, eof };

struct Token {
  Tok kind = Tok::eof;
  std::string text;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  int line = 1;
  int column = 1;
};

// Comments are dropped. `>` is always lexed alone (except `>=`) so that
// nested generic closers need no splitting; the parser reassembles shifts.
std::vector<Token> lex(std::string_view source, Language language, const std::string& file_name);

bool is_keyword(std::string_view word, Language language);

}  // namespace codemap::syntax::detail

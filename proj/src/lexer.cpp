#include <cctype>

#include "convexcert/lang.hpp"

namespace convexcert::lang {

LexError::LexError(std::size_t off, const std::string& what)
    : std::runtime_error("lex error at offset " + std::to_string(off) + ": " + what), offset(off) {}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_digit = [&](std::size_t k) { return k < src.size() && std::isdigit(static_cast<unsigned char>(src[k])); };
  auto push = [&](TokenKind kind, std::size_t len) {
    out.push_back({kind, std::string(src.substr(i, len)), i, i + len});
    i += len;
  };
  while (i < src.size()) {
    unsigned char c = static_cast<unsigned char>(src[i]);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    if (std::isdigit(c) || (c == '.' && is_digit(i + 1))) {
      std::size_t j = i;
      while (is_digit(j)) ++j;
      if (j < src.size() && src[j] == '.' && is_digit(j + 1)) {
        ++j;
        while (is_digit(j)) ++j;
      } else if (j < src.size() && src[j] == '.' && j + 1 < src.size() && src[j + 1] != '*' &&
                 src[j + 1] != '/' && src[j + 1] != '^') {
        ++j;  // trailing dot, "2."
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (is_digit(k)) {
          while (is_digit(k)) ++k;
          j = k;
        }
      }
      push(TokenKind::Number, j - i);
      continue;
    }
    if (std::isalpha(c) && c < 0x80) {
      std::size_t j = i;
      while (j < src.size() && c < 0x80 &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      push(TokenKind::Identifier, j - i);
      continue;
    }
    if (c == '.') {
      if (i + 1 < src.size() && (src[i + 1] == '*' || src[i + 1] == '/' || src[i + 1] == '^')) {
        push(TokenKind::DotOperator, 2);
        continue;
      }
      throw LexError(i, "stray '.'");
    }
    switch (c) {
      case '+':
      case '-':
      case '*':
      case '/':
      case '^':
        push(TokenKind::Operator, 1);
        continue;
      case '(':
      case ')':
        push(TokenKind::Paren, 1);
        continue;
      case '\'':
        push(TokenKind::Transpose, 1);
        continue;
      case ',':
        push(TokenKind::Comma, 1);
        continue;
      case '<':
      case '>':
        push(TokenKind::Relation, (i + 1 < src.size() && src[i + 1] == '=') ? 2 : 1);
        continue;
      default:
        break;
    }
    throw LexError(i, std::string("unexpected character '") + static_cast<char>(c) + "'");
  }
  return out;
}

}  // namespace convexcert::lang

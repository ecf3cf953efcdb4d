// SPDX-License-Identifier: Apache-2.0
#include "psdeob/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

#include "psdeob/error.hpp"

namespace psdeob {
namespace {

enum class Quote { None, Single, Double };

struct QuoteMatch {
  Quote type = Quote::None;
  std::size_t len = 0;
};

// PowerShell accepts the typographic quote characters as string delimiters.
QuoteMatch match_quote(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return {};
  char c = s[pos];
  if (c == '\'') return {Quote::Single, 1};
  if (c == '"') return {Quote::Double, 1};
  if (static_cast<unsigned char>(c) == 0xE2 && pos + 2 < s.size() &&
      static_cast<unsigned char>(s[pos + 1]) == 0x80) {
    switch (static_cast<unsigned char>(s[pos + 2])) {
      case 0x98: case 0x99: case 0x9A: case 0x9B: return {Quote::Single, 3};
      case 0x9C: case 0x9D: case 0x9E: return {Quote::Double, 3};
      default: break;
    }
  }
  return {};
}

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_hspace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

constexpr std::array<std::string_view, 29> kKeywords = {
    "foreach", "in",     "if",     "elseif", "else",     "try",   "catch", "finally",
    "break",   "continue", "return", "exit", "throw",    "function", "filter", "while",
    "for",     "do",     "until",  "switch", "param",    "begin", "process", "end",
    "trap",    "class",  "data",   "dynamicparam", "using"};

bool is_keyword(std::string_view word) {
  auto lower = ascii_lower(word);
  return std::find(kKeywords.begin(), kKeywords.end(), lower) != kKeywords.end();
}

// Characters that end a bare (command-mode) word.
bool ends_bareword(std::string_view s, std::size_t pos) {
  auto c = static_cast<unsigned char>(s[pos]);
  if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') return true;
  switch (c) {
    case ';': case '(': case ')': case '{': case '}': case '[': case ']': case '|':
    case '&': case ',': case '$': case '@': case '=': case '<': case '>': case '#':
      return true;
    default: break;
  }
  return match_quote(s, pos).type != Quote::None;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    while (pos_ < src_.size()) step();
    return std::move(out_);
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<Token> out_;

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void emit(TokenKind kind, std::string text, std::size_t start, std::size_t end) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.span = {start, end};
    out_.push_back(std::move(t));
  }

  // True when the previous token ends a value and touches `pos`, so that a
  // following `.` or `[` is member access / indexing.
  bool prev_is_adjacent_value(std::size_t pos) const {
    if (out_.empty()) return false;
    const Token& p = out_.back();
    if (p.span.end != pos) return false;
    switch (p.kind) {
      case TokenKind::Variable:
      case TokenKind::StringLiteral:
      case TokenKind::MemberAccess:
      case TokenKind::TypeLiteral:
      case TokenKind::Number:
        return true;
      case TokenKind::Paren:
        return p.text == ")";
      case TokenKind::Operator:
        return p.text == "]";
      case TokenKind::Brace:
        return p.text == "}";
      default:
        return false;
    }
  }

  void step() {
    const std::size_t start = pos_;
    const auto c = static_cast<unsigned char>(peek());

    if (is_hspace(c)) {
      ++pos_;
      return;
    }
    // non-breaking space
    if (c == 0xC2 && static_cast<unsigned char>(peek(1)) == 0xA0) {
      pos_ += 2;
      return;
    }
    if (c == '`') {
      if (peek(1) == '\n') {
        pos_ += 2;
        return;
      }
      if (peek(1) == '\r' && peek(2) == '\n') {
        pos_ += 3;
        return;
      }
      lex_bareword();
      return;
    }
    if (c == '\n' || c == ';') {
      ++pos_;
      emit(TokenKind::Semicolon, std::string(1, static_cast<char>(c)), start, pos_);
      return;
    }
    if (c == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      emit(TokenKind::Comment, std::string(src_.substr(start, pos_ - start)), start, pos_);
      return;
    }
    if (c == '<' && peek(1) == '#') {
      auto close = src_.find("#>", pos_ + 2);
      pos_ = close == std::string_view::npos ? src_.size() : close + 2;
      emit(TokenKind::Comment, std::string(src_.substr(start, pos_ - start)), start, pos_);
      return;
    }
    if (match_quote(src_, pos_).type != Quote::None) {
      lex_string();
      return;
    }
    if (c == '$') {
      lex_dollar();
      return;
    }
    if (c == '@') {
      if (peek(1) == '(') {
        pos_ += 2;
        emit(TokenKind::Paren, "@(", start, pos_);
      } else if (peek(1) == '{') {
        pos_ += 2;
        emit(TokenKind::Brace, "@{", start, pos_);
      } else {
        ++pos_;
        emit(TokenKind::Operator, "@", start, pos_);
      }
      return;
    }
    if (c == '(' || c == ')') {
      ++pos_;
      emit(TokenKind::Paren, std::string(1, static_cast<char>(c)), start, pos_);
      return;
    }
    if (c == '{' || c == '}') {
      ++pos_;
      emit(TokenKind::Brace, std::string(1, static_cast<char>(c)), start, pos_);
      return;
    }
    if (c == '[') {
      lex_bracket();
      return;
    }
    if (std::isdigit(c)) {
      lex_number();
      return;
    }
    if (c == '-' && std::isalpha(static_cast<unsigned char>(peek(1)))) {
      lex_dash_operator();
      return;
    }
    if (c == '.') {
      lex_dot();
      return;
    }
    if (c == ':' && peek(1) == ':') {
      pos_ += 2;
      emit(TokenKind::Operator, "::", start, pos_);
      lex_member_name();
      return;
    }
    if (is_ident_start(c) || c == '\\' || c == '~') {
      lex_bareword();
      return;
    }
    static constexpr std::array<std::string_view, 10> kTwoChar = {
        "+=", "-=", "*=", "/=", "%=", "++", "--", "&&", "||", "2>"};
    for (auto op : kTwoChar) {
      if (src_.substr(pos_, 2) == op) {
        pos_ += 2;
        emit(TokenKind::Operator, std::string(op), start, pos_);
        return;
      }
    }
    // Any other character, including stray UTF-8 sequences, is a one-character
    // operator so that garbage degrades at parse time instead of failing here.
    std::size_t len = 1;
    if (c >= 0xC0) {
      while (pos_ + len < src_.size() &&
             (static_cast<unsigned char>(src_[pos_ + len]) & 0xC0) == 0x80)
        ++len;
    }
    pos_ += len;
    emit(TokenKind::Operator, std::string(src_.substr(start, len)), start, pos_);
  }

  void lex_bareword() {
    const std::size_t start = pos_;
    std::string text;
    bool backticks = false;
    while (pos_ < src_.size()) {
      if (src_[pos_] == '`') {
        if (pos_ + 1 >= src_.size() || src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r') break;
        backticks = true;
        ++pos_;
        text += src_[pos_++];
        continue;
      }
      if (ends_bareword(src_, pos_)) break;
      text += src_[pos_++];
    }
    if (pos_ == start) {  // lone trailing backtick
      ++pos_;
      emit(TokenKind::Operator, "`", start, pos_);
      return;
    }
    auto kind = is_keyword(text) ? TokenKind::Keyword : TokenKind::CmdletName;
    emit(kind, std::move(text), start, pos_);
    out_.back().had_backticks = backticks;
  }

  void lex_dash_operator() {
    const std::size_t start = pos_;
    ++pos_;
    while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    std::string text(src_.substr(start, pos_ - start));
    auto kind = ascii_lower(text) == "-f" ? TokenKind::FormatOperator : TokenKind::Operator;
    emit(kind, std::move(text), start, pos_);
  }

  void lex_number() {
    const std::size_t start = pos_;
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X') &&
        std::isxdigit(static_cast<unsigned char>(peek(2)))) {
      pos_ += 2;
      while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    } else {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        ++pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    // "7zip" style words are command names, not numbers.
    if (pos_ < src_.size() &&
        (is_ident_char(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '`')) {
      pos_ = start;
      lex_bareword();
      return;
    }
    emit(TokenKind::Number, std::string(src_.substr(start, pos_ - start)), start, pos_);
  }

  void lex_dot() {
    const std::size_t start = pos_;
    if (peek(1) == '.') {
      pos_ += 2;
      emit(TokenKind::Operator, "..", start, pos_);
      return;
    }
    const bool member = prev_is_adjacent_value(start) &&
                        (is_ident_start(static_cast<unsigned char>(peek(1))) || peek(1) == '`' ||
                         match_quote(src_, pos_ + 1).type != Quote::None);
    ++pos_;
    emit(TokenKind::Operator, ".", start, pos_);
    if (member) lex_member_name();
  }

  // Member name following `.` or `::`; either a word or a quoted string.
  void lex_member_name() {
    const std::size_t start = pos_;
    auto q = match_quote(src_, pos_);
    std::string text;
    bool backticks = false;
    if (q.type != Quote::None) {
      pos_ += q.len;
      bool closed = false;
      while (pos_ < src_.size()) {
        auto m = match_quote(src_, pos_);
        if (m.type == q.type) {
          auto next = match_quote(src_, pos_ + m.len);
          if (next.type == q.type) {  // doubled quote
            text += src_.substr(pos_, m.len);
            pos_ += m.len + next.len;
            continue;
          }
          pos_ += m.len;
          closed = true;
          break;
        }
        if (src_[pos_] == '`' && q.type == Quote::Double) {
          backticks = true;
          ++pos_;
          if (pos_ < src_.size()) text += src_[pos_++];
          continue;
        }
        text += src_[pos_++];
      }
      if (!closed) throw LexError("unterminated member name string", start);
    } else {
      while (pos_ < src_.size()) {
        auto c = static_cast<unsigned char>(src_[pos_]);
        if (c == '`' && pos_ + 1 < src_.size() &&
            is_ident_char(static_cast<unsigned char>(src_[pos_ + 1]))) {
          backticks = true;
          ++pos_;
          continue;
        }
        if (!is_ident_char(c) || match_quote(src_, pos_).type != Quote::None) break;
        text += src_[pos_++];
      }
      if (pos_ == start) return;
    }
    emit(TokenKind::MemberAccess, std::move(text), start, pos_);
    out_.back().had_backticks = backticks;
  }

  void lex_bracket() {
    const std::size_t start = pos_;
    // [string][char]92 stacks casts; a type literal is never indexed
    const bool after_type = !out_.empty() && out_.back().kind == TokenKind::TypeLiteral;
    if (after_type || !prev_is_adjacent_value(start)) {
      // Type literal: [Name.Space.Type] or [char[]]
      std::size_t j = pos_ + 1;
      std::string name;
      bool backticks = false;
      auto first = static_cast<unsigned char>(j < src_.size() ? src_[j] : ' ');
      if (is_ident_start(first) || first == '`') {
        while (j < src_.size()) {
          auto c = static_cast<unsigned char>(src_[j]);
          if (c == '`') {
            backticks = true;
            ++j;
            continue;
          }
          if (is_ident_char(c) || c == '.') {
            name += static_cast<char>(c);
            ++j;
            continue;
          }
          break;
        }
        if (src_.substr(j, 2) == "[]") {
          name += "[]";
          j += 2;
        }
        if (j < src_.size() && src_[j] == ']' && !name.empty() &&
            match_quote(src_, j).type == Quote::None) {
          pos_ = j + 1;
          emit(TokenKind::TypeLiteral, std::move(name), start, pos_);
          out_.back().had_backticks = backticks;
          return;
        }
      }
    }
    ++pos_;
    emit(TokenKind::Operator, "[", start, pos_);
  }

  static bool var_name_char(unsigned char c) { return is_ident_char(c); }

  // Reads a variable name starting at `i` (just after `$`). Scope qualifiers
  // like `env:` are kept; `::` is left for the static member operator.
  std::size_t read_var_name(std::size_t i, std::string& name) const {
    while (i < src_.size()) {
      auto c = static_cast<unsigned char>(src_[i]);
      if (var_name_char(c)) {
        name += static_cast<char>(c);
        ++i;
        continue;
      }
      if (c == ':' && i + 1 < src_.size() && src_[i + 1] != ':' &&
          var_name_char(static_cast<unsigned char>(src_[i + 1])) && !name.empty() &&
          name.find(':') == std::string::npos) {
        name += ':';
        ++i;
        continue;
      }
      break;
    }
    return i;
  }

  void lex_dollar() {
    const std::size_t start = pos_;
    char n = peek(1);
    if (n == '(') {
      pos_ += 2;
      emit(TokenKind::Paren, "$(", start, pos_);
      return;
    }
    if (n == '{') {
      auto close = src_.find('}', pos_ + 2);
      if (close == std::string_view::npos) throw LexError("unterminated ${ variable", start);
      std::string name(src_.substr(pos_ + 2, close - pos_ - 2));
      pos_ = close + 1;
      emit(TokenKind::Variable, std::move(name), start, pos_);
      return;
    }
    if (n == '?' || n == '^' || n == '$') {
      pos_ += 2;
      emit(TokenKind::Variable, std::string(1, n), start, pos_);
      return;
    }
    if (var_name_char(static_cast<unsigned char>(n))) {
      std::string name;
      pos_ = read_var_name(pos_ + 1, name);
      emit(TokenKind::Variable, std::move(name), start, pos_);
      return;
    }
    ++pos_;
    emit(TokenKind::Operator, "$", start, pos_);
  }

  // Skips a `$( ... )` subexpression inside an expandable string, returning
  // the index just past the closing paren.
  std::size_t skip_subexpression(std::size_t i, std::size_t string_start) const {
    int depth = 0;
    while (i < src_.size()) {
      auto q = match_quote(src_, i);
      if (q.type == Quote::Single) {
        i += q.len;
        while (i < src_.size() && match_quote(src_, i).type != Quote::Single) ++i;
        i += i < src_.size() ? match_quote(src_, i).len : 0;
        continue;
      }
      char c = src_[i];
      if (c == '(') ++depth;
      if (c == ')') {
        if (--depth == 0) return i + 1;
      }
      ++i;
    }
    throw LexError("unterminated subexpression in string", string_start);
  }

  void lex_string() {
    const std::size_t start = pos_;
    auto q = match_quote(src_, pos_);
    pos_ += q.len;
    Token tok;
    tok.kind = TokenKind::StringLiteral;
    std::string literal;  // current literal run for parts
    auto flush = [&]() {
      if (!literal.empty()) {
        tok.parts.push_back({false, literal});
        literal.clear();
      }
    };
    bool closed = false;
    while (pos_ < src_.size()) {
      auto m = match_quote(src_, pos_);
      if (m.type == q.type) {
        auto next = match_quote(src_, pos_ + m.len);
        if (next.type == q.type) {
          auto quote = src_.substr(pos_, m.len);
          tok.text += quote;
          literal += quote;
          pos_ += m.len + next.len;
          continue;
        }
        pos_ += m.len;
        closed = true;
        break;
      }
      char c = src_[pos_];
      if (q.type == Quote::Double && c == '`') {
        if (pos_ + 1 >= src_.size()) break;
        char e = src_[pos_ + 1];
        std::string repl;
        switch (e) {
          case 'n': repl = "\n"; break;
          case 't': repl = "\t"; break;
          case '0': repl = std::string(1, '\0'); break;
          case 'r': repl = "\r"; break;
          case 'a': repl = "\a"; break;
          case 'b': repl = "\b"; break;
          case 'f': repl = "\f"; break;
          case 'v': repl = "\v"; break;
          case 'e': repl = "\x1b"; break;
          default: {
            // pass the escaped character through (full UTF-8 sequence)
            std::size_t len = 1;
            if (static_cast<unsigned char>(e) >= 0xC0)
              while (pos_ + 1 + len < src_.size() &&
                     (static_cast<unsigned char>(src_[pos_ + 1 + len]) & 0xC0) == 0x80)
                ++len;
            repl = std::string(src_.substr(pos_ + 1, len));
            pos_ += len - 1;
          }
        }
        tok.had_backticks = true;
        tok.text += repl;
        literal += repl;
        pos_ += 2;
        continue;
      }
      if (q.type == Quote::Double && c == '$') {
        char n = pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
        if (n == '(') {
          std::size_t end = skip_subexpression(pos_ + 1, start);
          tok.has_subexpression = true;
          tok.expandable = true;
          auto raw = src_.substr(pos_, end - pos_);
          tok.text += raw;
          literal += raw;
          pos_ = end;
          continue;
        }
        if (n == '{') {
          auto close = src_.find('}', pos_ + 2);
          if (close != std::string_view::npos) {
            flush();
            tok.parts.push_back({true, std::string(src_.substr(pos_ + 2, close - pos_ - 2))});
            tok.text += src_.substr(pos_, close + 1 - pos_);
            tok.expandable = true;
            pos_ = close + 1;
            continue;
          }
        }
        if (var_name_char(static_cast<unsigned char>(n))) {
          std::string name;
          std::size_t end = read_var_name(pos_ + 1, name);
          flush();
          tok.parts.push_back({true, name});
          tok.text += src_.substr(pos_, end - pos_);
          tok.expandable = true;
          pos_ = end;
          continue;
        }
      }
      tok.text += c;
      literal += c;
      ++pos_;
    }
    if (!closed) throw LexError("unterminated string literal", start);
    flush();
    if (!tok.expandable) tok.parts.clear();
    tok.span = {start, pos_};
    out_.push_back(std::move(tok));
  }
};

}  // namespace

std::string_view to_string(TokenKind k) {
  switch (k) {
    case TokenKind::StringLiteral: return "string-literal";
    case TokenKind::Variable: return "variable";
    case TokenKind::Number: return "number";
    case TokenKind::Operator: return "operator";
    case TokenKind::MemberAccess: return "member-access";
    case TokenKind::TypeLiteral: return "type-literal";
    case TokenKind::Paren: return "paren";
    case TokenKind::Brace: return "brace";
    case TokenKind::Semicolon: return "semicolon";
    case TokenKind::Keyword: return "keyword";
    case TokenKind::CmdletName: return "cmdlet-name";
    case TokenKind::FormatOperator: return "format-operator";
    case TokenKind::Comment: return "comment";
  }
  return "unknown";
}

std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    auto q = match_quote(text, i);
    if (q.type != Quote::None) {
      std::size_t j = i + q.len;
      while (j < text.size()) {
        auto m = match_quote(text, j);
        if (m.type == q.type) {
          auto next = match_quote(text, j + m.len);
          if (next.type == q.type) {
            j += m.len + next.len;
            continue;
          }
          j += m.len;
          break;
        }
        if (q.type == Quote::Double && text[j] == '`') {
          j += 2;
          continue;
        }
        ++j;
      }
      j = std::min(j, text.size());
      out.append(text.substr(i, j - i));
      i = j;
      continue;
    }
    char c = text[i];
    if (c == '`') {
      out.append(text.substr(i, std::min<std::size_t>(2, text.size() - i)));
      i += 2;
      continue;
    }
    if (c == '<' && i + 1 < text.size() && text[i + 1] == '#') {
      auto close = text.find("#>", i + 2);
      i = close == std::string_view::npos ? text.size() : close + 2;
      continue;
    }
    if (c == '#') {
      // `#` inside a bare word (a#b) is literal.
      bool in_word = i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) ||
                               text[i - 1] == '_' || text[i - 1] == '-');
      if (!in_word) {
        while (i < text.size() && text[i] != '\n') ++i;
        continue;
      }
    }
    out += c;
    ++i;
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text) { return Lexer(text).run(); }

std::string normalize_identifier(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (c == '`') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace psdeob

// SPDX-License-Identifier: Apache-2.0
//
// Input decoding and tokenization for the PowerShell subset used by
// obfuscated droppers. Backtick mangling is resolved here so that every
// downstream stage sees canonical identifiers.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace psdeob {

enum class Encoding { PlainUtf8, Base64Utf16le, Base64Utf8, Latin1Lossy };

std::string_view to_string(Encoding e);

struct SourceText {
  std::vector<std::uint8_t> raw_bytes;
  std::string decoded;  // UTF-8
  Encoding encoding_detected = Encoding::PlainUtf8;
};

enum class TokenKind {
  StringLiteral,
  Variable,
  Number,
  Operator,
  MemberAccess,
  TypeLiteral,
  Paren,
  Brace,
  Semicolon,
  Keyword,
  CmdletName,
  FormatOperator,
  Comment,
};

std::string_view to_string(TokenKind k);

/// Half-open byte range into the decoded text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

/// A literal run or a `$name` reference inside an expandable string.
struct StringPart {
  bool is_variable = false;
  std::string text;
  friend bool operator==(const StringPart&, const StringPart&) = default;
};

struct Token {
  TokenKind kind = TokenKind::Operator;
  std::string text;
  Span span;
  // Double-quoted strings that reference variables keep their pieces so the
  // parser can rebuild the concatenation.
  std::vector<StringPart> parts;
  bool expandable = false;
  bool has_subexpression = false;  // contains "$(...)"
  bool had_backticks = false;

  friend bool operator==(const Token&, const Token&) = default;
};

/// Auto-detects base64 (UTF-16LE first, then UTF-8) and plain UTF-8 input.
/// Throws UndecodableInput when no strategy yields text.
SourceText decode_input(std::span<const std::uint8_t> raw_bytes);
SourceText decode_input(std::string_view raw_bytes);
/// Last resort for bytes decode_input rejects: each byte is read as Latin-1,
/// with control characters other than whitespace mapped to U+FFFD. Throws
/// UndecodableInput only for empty input.
SourceText decode_lossy(std::string_view raw_bytes);

/// Removes `#` line comments and `<# ... #>` block comments outside strings.
std::string strip_comments(std::string_view text);

/// Throws LexError for unterminated string literals only; unrecognised
/// characters become single-character operator tokens.
std::vector<Token> tokenize(std::string_view text);

/// Lowercase, backtick-free form used for every name comparison.
std::string normalize_identifier(std::string_view raw);

// Codec helpers, also used by the synthetic generator and tests.
std::string base64_encode(std::span<const std::uint8_t> bytes);
std::string base64_encode(std::string_view bytes);
/// Returns false on any non-alphabet character or bad length.
bool base64_decode(std::string_view text, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> utf8_to_utf16le(std::string_view utf8);
/// Fails on unpaired surrogates and odd byte counts.
bool utf16le_to_utf8(std::span<const std::uint8_t> bytes, std::string& out);
bool is_valid_utf8(std::string_view text);
std::string encode_codepoint(char32_t cp);

}  // namespace psdeob

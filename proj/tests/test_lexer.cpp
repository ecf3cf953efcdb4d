// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "psdeob/error.hpp"
#include "psdeob/lexer.hpp"
#include "test_support.hpp"

using namespace psdeob;
using psdeob::testing::read_data;

namespace {

std::vector<std::pair<TokenKind, std::string>> kinds_and_texts(std::string_view src) {
  std::vector<std::pair<TokenKind, std::string>> out;
  for (const auto& t : tokenize(src)) out.emplace_back(t.kind, t.text);
  return out;
}

// Independent UTF-16LE encoder for ASCII test strings.
std::string ascii_utf16le(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += c;
    out += '\0';
  }
  return out;
}

}  // namespace

TEST(DecodeInput, PlainUtf8) {
  auto src = decode_input(std::string_view("echo hi"));
  EXPECT_EQ(src.decoded, "echo hi");
  EXPECT_EQ(src.encoding_detected, Encoding::PlainUtf8);
}

TEST(DecodeInput, Base64Utf16le) {
  // "dir" as UTF-16LE is 64 00 69 00 72 00; base64 of those six bytes.
  auto src = decode_input(std::string_view("ZABpAHIA"));
  EXPECT_EQ(src.decoded, "dir");
  EXPECT_EQ(src.encoding_detected, Encoding::Base64Utf16le);
}

TEST(DecodeInput, Base64Utf8) {
  // base64("$a='hello world'")
  auto src = decode_input(std::string_view("JGE9J2hlbGxvIHdvcmxkJw=="));
  EXPECT_EQ(src.decoded, "$a='hello world'");
  EXPECT_EQ(src.encoding_detected, Encoding::Base64Utf8);
}

TEST(DecodeInput, RejectsBinary) {
  const std::uint8_t bytes[] = {0xFF, 0xFE, 0x00};
  EXPECT_THROW(decode_input(std::span<const std::uint8_t>(bytes)), UndecodableInput);
  EXPECT_THROW(decode_input(std::string_view()), UndecodableInput);
}

TEST(DecodeInput, LossyFallbackKeepsEveryByte) {
  const std::string bytes = std::string("\xFF\xFE", 2) + std::string(1, '\0') + "a";
  auto src = decode_lossy(bytes);
  EXPECT_EQ(src.encoding_detected, Encoding::Latin1Lossy);
  EXPECT_TRUE(is_valid_utf8(src.decoded));
  EXPECT_EQ(src.decoded, "\xC3\xBF\xC3\xBE\xEF\xBF\xBD" "a");
}

TEST(DecodeInput, RoundTripProperty) {
  std::mt19937 rng(1234);
  for (int i = 0; i < 100; ++i) {
    std::string s;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int k = 0; k < n; ++k) s += static_cast<char>(0x20 + rng() % 95);
    // Strings that themselves look like base64 would be decoded again.
    std::vector<std::uint8_t> scratch;
    if (base64_decode(s, scratch)) continue;
    if (s.find_first_not_of(' ') == std::string::npos) continue;

    EXPECT_EQ(decode_input(s).decoded, s);
    auto wide = base64_encode(ascii_utf16le(s));
    auto src = decode_input(wide);
    EXPECT_EQ(src.decoded, s) << wide;
    EXPECT_EQ(src.encoding_detected, Encoding::Base64Utf16le);
  }
}

TEST(StripComments, Examples) {
  EXPECT_EQ(strip_comments("a=1 # note"), "a=1 ");
  EXPECT_EQ(strip_comments("'#notacomment'"), "'#notacomment'");
  EXPECT_EQ(strip_comments("<# x #>b"), "b");
  EXPECT_EQ(strip_comments("a<# never closed"), "a");
  EXPECT_EQ(strip_comments("\"#x\" # y\nz"), "\"#x\" \nz");
}

TEST(Tokenize, BacktickMemberIsOneToken) {
  auto toks = tokenize("$x.\"crEa`T`e`d`iRectoRy\"");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[1].text, ".");
  EXPECT_EQ(toks[2].kind, TokenKind::MemberAccess);
  EXPECT_EQ(toks[2].text, "crEaTediRectoRy");
}

TEST(Tokenize, NestedConcat) {
  using K = TokenKind;
  auto got = kinds_and_texts("('T'+('ls1'+'2'))");
  std::vector<std::pair<K, std::string>> want = {
      {K::Paren, "("},        {K::StringLiteral, "T"}, {K::Operator, "+"}, {K::Paren, "("},
      {K::StringLiteral, "ls1"}, {K::Operator, "+"},   {K::StringLiteral, "2"}, {K::Paren, ")"},
      {K::Paren, ")"}};
  EXPECT_EQ(got, want);
}

TEST(Tokenize, Variable) {
  auto toks = tokenize("$HOME");
  ASSERT_EQ(toks.size(), 1u);
  EXPECT_EQ(toks[0].kind, TokenKind::Variable);
  EXPECT_EQ(toks[0].text, "HOME");
}

TEST(Tokenize, StringEscapes) {
  auto toks = tokenize("'it''s' \"a`tb\" \"q\"\"q\"");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[0].text, "it's");
  EXPECT_EQ(toks[1].text, "a\tb");
  EXPECT_EQ(toks[2].text, "q\"q");
}

TEST(Tokenize, FormatOperatorIffDashF) {
  for (const auto& t : tokenize("\"{0}\" -F 'a'; \"{0}\" -f 'b'; $x -ge 1; -join 'c'")) {
    std::string lower = normalize_identifier(t.text);
    EXPECT_EQ(t.kind == TokenKind::FormatOperator, lower == "-f") << t.text;
  }
}

TEST(Tokenize, UnterminatedStringIsLexError) {
  try {
    tokenize("$a = 'open");
    FAIL() << "expected LexError";
  } catch (const LexError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
}

TEST(Tokenize, GoldenSampleSpansAreInBounds) {
  auto text = strip_comments(read_data("fig2a.ps1"));
  auto toks = tokenize(text);
  ASSERT_FALSE(toks.empty());
  std::size_t prev_end = 0;
  for (const auto& t : toks) {
    EXPECT_LT(t.span.start, t.span.end);
    EXPECT_LE(t.span.end, text.size());
    EXPECT_GE(t.span.start, prev_end);
    prev_end = t.span.end;
  }
}

// Outside the spans there is only whitespace; inside, a token's source slice
// minus backticks and quoting reproduces its text for names.
TEST(Tokenize, SpanFidelity) {
  auto text = strip_comments(read_data("fig2a.ps1"));
  auto toks = tokenize(text);
  std::size_t pos = 0;
  for (const auto& t : toks) {
    for (std::size_t i = pos; i < t.span.start; ++i)
      EXPECT_TRUE(std::isspace(static_cast<unsigned char>(text[i]))) << "offset " << i;
    pos = t.span.end;
    if (t.kind == TokenKind::Variable || t.kind == TokenKind::CmdletName || t.kind == TokenKind::Number) {
      std::string slice = text.substr(t.span.start, t.span.end - t.span.start);
      std::string clean;
      for (char c : slice)
        if (c != '`') clean += c;
      if (t.kind == TokenKind::Variable) clean.erase(0, 1);
      EXPECT_EQ(clean, t.text);
    }
  }
}

TEST(NormalizeIdentifier, Examples) {
  EXPECT_EQ(normalize_identifier("DoW`NloAd`FiLE"), "downloadfile");
  EXPECT_EQ(normalize_identifier("R`eP`lAce"), "replace");
  EXPECT_EQ(normalize_identifier("x"), "x");
}

TEST(NormalizeIdentifier, IdempotentProperty) {
  std::mt19937 rng(99);
  const std::string alphabet = "aBcDeF`xYz-_09";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (int k = 0, n = static_cast<int>(rng() % 20); k < n; ++k) s += alphabet[rng() % alphabet.size()];
    auto once = normalize_identifier(s);
    EXPECT_EQ(normalize_identifier(once), once);
    EXPECT_EQ(once.find('`'), std::string::npos);
  }
}

TEST(Codec, Base64KnownVectors) {
  EXPECT_EQ(base64_encode(std::string_view("")), "");
  EXPECT_EQ(base64_encode(std::string_view("f")), "Zg==");
  EXPECT_EQ(base64_encode(std::string_view("fo")), "Zm8=");
  EXPECT_EQ(base64_encode(std::string_view("foo")), "Zm9v");
  EXPECT_EQ(base64_encode(std::string_view("foobar")), "Zm9vYmFy");
  std::vector<std::uint8_t> out;
  EXPECT_TRUE(base64_decode("Zm9vYmE=", out));
  EXPECT_EQ(std::string(out.begin(), out.end()), "fooba");
  EXPECT_FALSE(base64_decode("Zm9$", out));
}

TEST(Codec, Utf16RejectsLoneSurrogate) {
  const std::uint8_t lone[] = {0x00, 0xD8};
  std::string out;
  EXPECT_FALSE(utf16le_to_utf8(lone, out));
  const std::uint8_t pair[] = {0x3D, 0xD8, 0x00, 0xDE};  // U+1F600
  EXPECT_TRUE(utf16le_to_utf8(pair, out));
  EXPECT_EQ(out, "\xF0\x9F\x98\x80");
}

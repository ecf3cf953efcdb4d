// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <cctype>

#include "psdeob/error.hpp"
#include "psdeob/lexer.hpp"

namespace psdeob {
namespace {

constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::array<int, 256> make_decode_table() {
  std::array<int, 256> t{};
  for (auto& v : t) v = -1;
  for (std::size_t i = 0; i < kBase64Alphabet.size(); ++i)
    t[static_cast<unsigned char>(kBase64Alphabet[i])] = static_cast<int>(i);
  return t;
}
constexpr auto kDecodeTable = make_decode_table();

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

// Decoded payloads must look like script text: no stray control characters,
// no noncharacters.
bool is_texty(std::string_view utf8) {
  for (std::size_t i = 0; i < utf8.size(); ++i) {
    auto c = static_cast<unsigned char>(utf8[i]);
    if (c < 0x20 && c != '\t' && c != '\n' && c != '\r') return false;
    if (c == 0x7f) return false;
    // U+FFFE / U+FFFF
    if (c == 0xEF && i + 2 < utf8.size() && static_cast<unsigned char>(utf8[i + 1]) == 0xBF &&
        (static_cast<unsigned char>(utf8[i + 2]) == 0xBE ||
         static_cast<unsigned char>(utf8[i + 2]) == 0xBF))
      return false;
  }
  return !utf8.empty();
}

bool looks_like_base64(std::string_view s) {
  std::size_t total = 0, in_alphabet = 0;
  for (unsigned char c : s) {
    if (is_space(c)) continue;
    ++total;
    if (kDecodeTable[c] >= 0 || c == '=') ++in_alphabet;
  }
  if (total < 4 || total % 4 != 0) return false;
  return in_alphabet * 100 >= total * 95;
}

std::string strip_bom(std::string s) {
  if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
      static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF)
    s.erase(0, 3);
  return s;
}

}  // namespace

std::string_view to_string(Encoding e) {
  switch (e) {
    case Encoding::PlainUtf8: return "plain-utf8";
    case Encoding::Base64Utf16le: return "base64-utf16le";
    case Encoding::Base64Utf8: return "base64-utf8";
    case Encoding::Latin1Lossy: return "latin1-lossy";
  }
  return "unknown";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kBase64Alphabet[(v >> 18) & 63];
    out += kBase64Alphabet[(v >> 12) & 63];
    out += kBase64Alphabet[(v >> 6) & 63];
    out += kBase64Alphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    out += kBase64Alphabet[(v >> 18) & 63];
    out += kBase64Alphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kBase64Alphabet[(v >> 18) & 63];
    out += kBase64Alphabet[(v >> 12) & 63];
    out += kBase64Alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::string base64_encode(std::string_view bytes) {
  return base64_encode(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

bool base64_decode(std::string_view text, std::vector<std::uint8_t>& out) {
  out.clear();
  std::string compact;
  compact.reserve(text.size());
  for (unsigned char c : text)
    if (!is_space(c)) compact += static_cast<char>(c);
  if (compact.empty() || compact.size() % 4 != 0) return false;
  std::size_t pad = 0;
  if (compact.back() == '=') ++pad;
  if (compact.size() > 1 && compact[compact.size() - 2] == '=') ++pad;
  for (std::size_t i = 0; i < compact.size() - pad; ++i)
    if (kDecodeTable[static_cast<unsigned char>(compact[i])] < 0) return false;
  out.reserve(compact.size() / 4 * 3);
  for (std::size_t i = 0; i < compact.size(); i += 4) {
    std::uint32_t v = 0;
    int valid = 0;
    for (int k = 0; k < 4; ++k) {
      char c = compact[i + k];
      v <<= 6;
      if (c != '=') {
        v |= static_cast<std::uint32_t>(kDecodeTable[static_cast<unsigned char>(c)]);
        ++valid;
      }
    }
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    if (valid > 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    if (valid > 3) out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  return true;
}

std::string encode_codepoint(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > text.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong, surrogate and range checks
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000))
      return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

std::vector<std::uint8_t> utf8_to_utf16le(std::string_view utf8) {
  std::vector<std::uint8_t> out;
  std::size_t i = 0;
  auto put = [&out](std::uint16_t u) {
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
  };
  while (i < utf8.size()) {
    auto c = static_cast<unsigned char>(utf8[i]);
    char32_t cp;
    std::size_t len;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      len = 3;
    } else {
      cp = c & 0x07;
      len = 4;
    }
    for (std::size_t k = 1; k < len && i + k < utf8.size(); ++k)
      cp = (cp << 6) | (static_cast<unsigned char>(utf8[i + k]) & 0x3F);
    i += len;
    if (cp >= 0x10000) {
      cp -= 0x10000;
      put(static_cast<std::uint16_t>(0xD800 + (cp >> 10)));
      put(static_cast<std::uint16_t>(0xDC00 + (cp & 0x3FF)));
    } else {
      put(static_cast<std::uint16_t>(cp));
    }
  }
  return out;
}

bool utf16le_to_utf8(std::span<const std::uint8_t> bytes, std::string& out) {
  out.clear();
  if (bytes.size() % 2 != 0) return false;
  for (std::size_t i = 0; i < bytes.size(); i += 2) {
    char32_t u = bytes[i] | (bytes[i + 1] << 8);
    if (u >= 0xD800 && u <= 0xDBFF) {
      if (i + 3 >= bytes.size()) return false;
      char32_t lo = bytes[i + 2] | (bytes[i + 3] << 8);
      if (lo < 0xDC00 || lo > 0xDFFF) return false;
      u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
      i += 2;
    } else if (u >= 0xDC00 && u <= 0xDFFF) {
      return false;
    }
    out += encode_codepoint(u);
  }
  return true;
}

SourceText decode_input(std::span<const std::uint8_t> raw_bytes) {
  if (raw_bytes.empty()) throw UndecodableInput("empty input");
  SourceText src;
  src.raw_bytes.assign(raw_bytes.begin(), raw_bytes.end());
  std::string_view as_text(reinterpret_cast<const char*>(raw_bytes.data()), raw_bytes.size());

  if (looks_like_base64(as_text)) {
    std::vector<std::uint8_t> decoded;
    if (base64_decode(as_text, decoded) && !decoded.empty()) {
      std::string wide;
      bool utf16 = utf16le_to_utf8(decoded, wide);
      if (utf16) {
        if (wide.rfind("\xEF\xBB\xBF", 0) == 0) wide.erase(0, 3);
        utf16 = is_texty(wide);
      }
      std::string_view as_utf8(reinterpret_cast<const char*>(decoded.data()), decoded.size());
      std::string narrow;
      bool utf8 = is_valid_utf8(as_utf8);
      if (utf8) {
        narrow = strip_bom(std::string(as_utf8));
        utf8 = is_texty(narrow);
      }
      // -EncodedCommand payloads are UTF-16LE script text, so mostly ASCII
      // with zero high bytes. Without that signal a valid UTF-8 reading wins.
      std::size_t zero_high = 0;
      for (std::size_t i = 1; i < decoded.size(); i += 2) zero_high += decoded[i] == 0;
      const bool ascii_heavy = zero_high * 2 >= decoded.size() / 2;
      if (utf16 && (ascii_heavy || !utf8)) {
        src.decoded = std::move(wide);
        src.encoding_detected = Encoding::Base64Utf16le;
        return src;
      }
      if (utf8) {
        src.decoded = std::move(narrow);
        src.encoding_detected = Encoding::Base64Utf8;
        return src;
      }
    }
  }
  if (is_valid_utf8(as_text) && as_text.find('\0') == std::string_view::npos) {
    src.decoded = strip_bom(std::string(as_text));
    src.encoding_detected = Encoding::PlainUtf8;
    if (!src.decoded.empty()) return src;
  }
  throw UndecodableInput("input is neither base64-encoded script text nor UTF-8");
}

SourceText decode_input(std::string_view raw_bytes) {
  return decode_input(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(raw_bytes.data()), raw_bytes.size()));
}

SourceText decode_lossy(std::string_view raw_bytes) {
  if (raw_bytes.empty()) throw UndecodableInput("empty input");
  SourceText src;
  src.raw_bytes.assign(raw_bytes.begin(), raw_bytes.end());
  src.encoding_detected = Encoding::Latin1Lossy;
  for (unsigned char c : raw_bytes) {
    if (c < 0x20 && c != '\t' && c != '\n' && c != '\r')
      src.decoded += encode_codepoint(0xFFFD);
    else
      src.decoded += encode_codepoint(c);
  }
  return src;
}

}  // namespace psdeob

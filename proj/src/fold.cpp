// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <limits>

#include "eval_internal.hpp"
#include "psdeob/error.hpp"
#include "psdeob/lexer.hpp"

namespace psdeob {

using detail::ascii_lower;
using detail::to_text;

std::string_view to_string(ValueKind k) {
  switch (k) {
    case ValueKind::Unknown: return "unknown";
    case ValueKind::Text: return "text";
    case ValueKind::Number: return "number";
    case ValueKind::TextList: return "text-list";
    case ValueKind::TypeName: return "type-name";
  }
  return "unknown";
}

Value Value::of_text(std::string s) {
  Value v;
  v.kind = ValueKind::Text;
  v.text = std::move(s);
  return v;
}
Value Value::of_number(std::int64_t n) {
  Value v;
  v.kind = ValueKind::Number;
  v.number = n;
  return v;
}
Value Value::of_list(std::vector<std::string> items) {
  Value v;
  v.kind = ValueKind::TextList;
  v.items = std::move(items);
  return v;
}
Value Value::of_type(std::string_view name) {
  Value v;
  v.kind = ValueKind::TypeName;
  v.text = ascii_lower(name);
  return v;
}

// --- environment -----------------------------------------------------------

const Value* Environment::find(std::string_view name) const {
  auto it = bindings_.find(name);
  return it == bindings_.end() ? nullptr : &it->second;
}

Value Environment::read(std::string_view name) const {
  if (const Value* v = find(name)) return *v;
  if (name == "null") return Value::of_text("");
  if (is_automatic_variable(name)) return Value::unknown();
  ++unbound_reads_;
  return Value::of_text("");
}

void Environment::bind(std::string_view name, Value v) {
  auto it = bindings_.find(name);
  if (it == bindings_.end()) {
    order_.emplace_back(name);
    bindings_.emplace(std::string(name), std::move(v));
  } else {
    it->second = std::move(v);
  }
}

void Environment::leave_scope(const Environment& inner, const std::set<std::string>& assigned) {
  unbound_reads_ = std::max(unbound_reads_, inner.unbound_reads_);
  for (const auto& name : assigned) bind(name, Value::unknown());
}

bool is_automatic_variable(std::string_view name) {
  static constexpr std::array<std::string_view, 40> kAutomatic = {
      "home", "pshome", "pwd", "profile", "host", "psscriptroot", "pscommandpath",
      "myinvocation", "args", "input", "_", "psitem", "this", "shellid", "psversiontable",
      "executioncontext", "error", "lastexitcode", "matches", "true", "false", "pid",
      "psculture", "psuiculture", "stacktrace", "ofs", "foreach", "switch", "nestedpromptlevel",
      "sender", "event", "eventargs", "eventsubscriber", "psboundparameters", "pscmdlet",
      "iswindows", "islinux", "ismacos", "?", "^"};
  if (std::find(kAutomatic.begin(), kAutomatic.end(), name) != kAutomatic.end()) return true;
  // provider-qualified names: env:TEMP, function:foo, ...
  return name.find(':') != std::string_view::npos;
}

// --- primitives --------------------------------------------------------------

std::string eval_format(std::string_view format, const std::vector<std::string>& args) {
  std::string out;
  std::size_t i = 0;
  while (i < format.size()) {
    char c = format[i];
    if (c == '{') {
      if (i + 1 < format.size() && format[i + 1] == '{') {
        out += '{';
        i += 2;
        continue;
      }
      std::size_t j = i + 1;
      std::size_t index = 0;
      std::size_t digits = 0;
      while (j < format.size() && std::isdigit(static_cast<unsigned char>(format[j]))) {
        index = index * 10 + static_cast<std::size_t>(format[j] - '0');
        if (index > 1000000) throw FormatSyntaxError("format index too large");
        ++j;
        ++digits;
      }
      if (digits == 0) throw FormatSyntaxError("expected index after '{'");
      while (j < format.size() && format[j] == ' ') ++j;
      long align = 0;
      if (j < format.size() && format[j] == ',') {
        ++j;
        while (j < format.size() && format[j] == ' ') ++j;
        bool neg = false;
        if (j < format.size() && format[j] == '-') {
          neg = true;
          ++j;
        }
        std::size_t adigits = 0;
        while (j < format.size() && std::isdigit(static_cast<unsigned char>(format[j]))) {
          align = align * 10 + (format[j] - '0');
          if (align > 100000) throw FormatSyntaxError("alignment too large");
          ++j;
          ++adigits;
        }
        if (adigits == 0) throw FormatSyntaxError("expected alignment");
        if (neg) align = -align;
        while (j < format.size() && format[j] == ' ') ++j;
      }
      if (j < format.size() && format[j] == ':')
        throw FormatSyntaxError("format specifiers are not supported");
      if (j >= format.size() || format[j] != '}') throw FormatSyntaxError("unterminated placeholder");
      if (index >= args.size())
        throw FormatIndexError("placeholder {" + std::to_string(index) + "} with " +
                               std::to_string(args.size()) + " arguments");
      const std::string& arg = args[index];
      auto width = static_cast<std::size_t>(align < 0 ? -align : align);
      auto len = detail::utf16_length(arg);
      std::string pad = width > len ? std::string(width - len, ' ') : std::string();
      if (align > 0) out += pad;
      out += arg;
      if (align < 0) out += pad;
      i = j + 1;
      continue;
    }
    if (c == '}') {
      if (i + 1 < format.size() && format[i + 1] == '}') {
        out += '}';
        i += 2;
        continue;
      }
      throw FormatSyntaxError("unmatched '}'");
    }
    out += c;
    ++i;
  }
  return out;
}

std::string eval_replace(std::string_view subject, std::string_view needle,
                         std::string_view replacement) {
  if (needle.empty()) throw EvalError("replace with an empty needle");
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    auto hit = subject.find(needle, pos);
    if (hit == std::string_view::npos) break;
    out.append(subject.substr(pos, hit - pos));
    out.append(replacement);
    pos = hit + needle.size();
  }
  out.append(subject.substr(pos));
  return out;
}

std::vector<std::string> eval_split(std::string_view subject, std::string_view separator) {
  if (separator.empty()) throw SplitSeparatorError("split separator is empty");
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    auto hit = subject.find(separator, pos);
    auto piece = subject.substr(pos, hit == std::string_view::npos ? std::string_view::npos : hit - pos);
    if (!piece.empty()) out.emplace_back(piece);
    if (hit == std::string_view::npos) break;
    pos = hit + separator.size();
  }
  return out;
}

std::string eval_charcast(std::int64_t code) {
  if (code < 0 || code > 0x10FFFF) throw CharRangeError("char code out of range: " + std::to_string(code));
  if (code >= 0xD800 && code <= 0xDFFF) throw CharRangeError("lone surrogate: " + std::to_string(code));
  return encode_codepoint(static_cast<char32_t>(code));
}

// --- helpers -----------------------------------------------------------------

namespace detail {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<std::string> to_text(const Value& v) {
  switch (v.kind) {
    case ValueKind::Text: return v.text;
    case ValueKind::Number: return std::to_string(v.number);
    case ValueKind::TextList: {
      // $OFS defaults to a single space
      std::string out;
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += ' ';
        out += v.items[i];
      }
      return out;
    }
    default: return std::nullopt;
  }
}

std::size_t utf16_length(std::string_view utf8) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < utf8.size(); ++i) {
    auto c = static_cast<unsigned char>(utf8[i]);
    if ((c & 0xC0) == 0x80) continue;
    n += (c >= 0xF0) ? 2 : 1;
  }
  return n;
}

bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

bool is_string_automatic(std::string_view name) {
  static constexpr std::array<std::string_view, 6> kStrings = {
      "home", "pshome", "profile", "psscriptroot", "pscommandpath", "shellid"};
  if (std::find(kStrings.begin(), kStrings.end(), name) != kStrings.end()) return true;
  return name.rfind("env:", 0) == 0;
}

Expr literal_of(const Value& v) {
  Expr e;
  switch (v.kind) {
    case ValueKind::Text: e.node = StringLit{v.text}; break;
    case ValueKind::Number: e.node = Number{std::to_string(v.number), v.number}; break;
    case ValueKind::TypeName: e.node = TypeCast{v.text, {}}; break;
    case ValueKind::TextList: {
      ArrayLit arr;
      for (const auto& s : v.items) {
        Expr item;
        item.node = StringLit{s};
        arr.items.push_back(std::move(item));
      }
      e.node = std::move(arr);
      break;
    }
    case ValueKind::Unknown: e.node = UnknownExpr{}; break;
  }
  return e;
}

const Expr& unwrap_parens(const Expr& e) {
  const Expr* cur = &e;
  while (auto* p = cur->as<Paren>()) {
    if (!p->inner) break;
    cur = &*p->inner;
  }
  return *cur;
}

std::optional<std::string> command_name(const CmdletCall& call, const Environment& env) {
  if (!call.name) return std::nullopt;
  if (auto* s = call.name->as<StringLit>()) return ascii_lower(s->text);
  auto v = fold_expr(*call.name, env);
  if (v.kind != ValueKind::Text) return std::nullopt;
  return ascii_lower(v.text);
}

std::optional<GetVariableCall> as_get_variable(const Expr& e, const Environment& env) {
  const auto* call = unwrap_parens(e).as<CmdletCall>();
  if (!call) return std::nullopt;
  auto name = command_name(*call, env);
  if (!name || (*name != "get-variable" && *name != "gv")) return std::nullopt;
  GetVariableCall out;
  std::optional<std::string> target;
  bool expect_name = false;
  for (const auto& arg : call->args) {
    auto* s = arg.as<StringLit>();
    if (s && s->bare && s->text.size() > 1 && s->text[0] == '-') {
      auto flag = ascii_lower(s->text);
      if (flag == "-valueonly") {
        out.value_only = true;
      } else if (flag == "-name") {
        expect_name = true;
      } else {
        return std::nullopt;
      }
      continue;
    }
    if (target) return std::nullopt;
    auto v = fold_expr(arg, env);
    if (v.kind != ValueKind::Text) return std::nullopt;
    target = v.text;
    expect_name = false;
  }
  if (!target || expect_name) return std::nullopt;
  if (target->find_first_of("*?[") != std::string::npos) return std::nullopt;
  out.name = canonical_var_name(*target);
  return out;
}

bool is_pure(const Expr& e) {
  static constexpr std::array<std::string_view, 20> kPureMethods = {
      "replace", "split", "tostring", "tolower", "toupper", "tolowerinvariant",
      "toupperinvariant", "trim", "trimstart", "trimend", "substring", "insert", "remove",
      "padleft", "padright", "startswith", "endswith", "contains", "indexof", "getenumerator"};
  static constexpr std::array<std::string_view, 12> kPureTypes = {
      "string", "system.string", "int", "int32", "int64", "long", "char", "system.char",
      "type", "string[]", "array", "object[]"};
  auto all_pure = [](const std::vector<Expr>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](const Expr& x) { return is_pure(x); });
  };
  auto box_pure = [](const Box<Expr>& b) { return !b || is_pure(*b); };
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, StringLit> || std::is_same_v<T, Number> ||
                      std::is_same_v<T, VarRef>) {
          return true;
        } else if constexpr (std::is_same_v<T, Concat>) {
          return box_pure(n.left) && box_pure(n.right);
        } else if constexpr (std::is_same_v<T, FormatOp>) {
          return box_pure(n.format) && all_pure(n.args);
        } else if constexpr (std::is_same_v<T, CharCast>) {
          return box_pure(n.code);
        } else if constexpr (std::is_same_v<T, TypeCast>) {
          if (!n.inner) return true;
          return std::find(kPureTypes.begin(), kPureTypes.end(), n.type_name) != kPureTypes.end() &&
                 is_pure(*n.inner);
        } else if constexpr (std::is_same_v<T, MethodCall>) {
          return std::find(kPureMethods.begin(), kPureMethods.end(), n.method) != kPureMethods.end() &&
                 box_pure(n.receiver) && all_pure(n.args);
        } else if constexpr (std::is_same_v<T, StaticCall>) {
          const auto* t = n.type ? n.type->template as<TypeCast>() : nullptr;
          bool string_type = t && !t->inner &&
                             (t->type_name == "string" || t->type_name == "system.string");
          return string_type && (n.member == "join" || n.member == "concat" || n.member == "format") &&
                 all_pure(n.args);
        } else if constexpr (std::is_same_v<T, MemberGet>) {
          return box_pure(n.receiver);
        } else if constexpr (std::is_same_v<T, Index>) {
          return box_pure(n.target) && box_pure(n.index);
        } else if constexpr (std::is_same_v<T, CmdletCall>) {
          Environment empty;
          return as_get_variable(e, empty).has_value();
        } else if constexpr (std::is_same_v<T, Paren>) {
          return box_pure(n.inner);
        } else if constexpr (std::is_same_v<T, ArrayLit>) {
          return all_pure(n.items);
        } else if constexpr (std::is_same_v<T, UnaryOp>) {
          return box_pure(n.operand);
        } else if constexpr (std::is_same_v<T, BinaryOp>) {
          return box_pure(n.left) && box_pure(n.right);
        } else {
          return false;  // UnknownExpr
        }
      },
      e.node);
}

}  // namespace detail

// --- folding -----------------------------------------------------------------

namespace {

std::optional<std::int64_t> parse_integer_text(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  bool neg = false;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  std::int64_t v = 0;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return neg ? -v : v;
}

// Single code point text -> its code.
std::optional<std::int64_t> single_codepoint(std::string_view s) {
  if (s.empty() || !is_valid_utf8(s)) return std::nullopt;
  auto c = static_cast<unsigned char>(s[0]);
  std::size_t len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
  if (len != s.size()) return std::nullopt;
  char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
  for (std::size_t i = 1; i < len; ++i) cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3F);
  return static_cast<std::int64_t>(cp);
}

std::string strip_system(std::string_view type) {
  std::string t = ascii_lower(type);
  if (t.rfind("system.", 0) == 0) t.erase(0, 7);
  return t;
}

bool is_type_name_text(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (!(std::isalnum(u) || c == '.' || c == '_' || c == '[' || c == ']' || c == '`' || c == '+'))
      return false;
  }
  return std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_';
}

constexpr std::size_t kMaxText = 1u << 22;

class Folder {
 public:
  Folder(const Environment& env, FoldStats* stats) : env_(env), stats_(stats) {}

  Value fold(const Expr& e) {
    return std::visit([&](const auto& n) { return fold_node(n, e); }, e.node);
  }

 private:
  const Environment& env_;
  FoldStats* stats_;

  Value counted(Value v) {
    if (v.known() && stats_) ++stats_->transforms;
    return v;
  }
  Value fold_box(const Box<Expr>& b) { return b ? fold(*b) : Value::unknown(); }

  Value fold_node(const StringLit& n, const Expr&) { return Value::of_text(n.text); }
  Value fold_node(const Number& n, const Expr&) {
    return n.value ? Value::of_number(*n.value) : Value::unknown();
  }
  Value fold_node(const VarRef& n, const Expr&) { return env_.read(n.name); }
  Value fold_node(const UnknownExpr&, const Expr&) { return Value::unknown(); }
  Value fold_node(const Paren& n, const Expr&) { return fold_box(n.inner); }

  Value fold_node(const Concat& n, const Expr&) {
    Value l = fold_box(n.left);
    Value r = fold_box(n.right);
    return counted(concat(l, r));
  }

  static Value concat(const Value& l, const Value& r) {
    if (!l.known() || !r.known()) return Value::unknown();
    switch (l.kind) {
      case ValueKind::Text: {
        auto rt = to_text(r);
        if (!rt) return Value::unknown();
        if (l.text.size() + rt->size() > kMaxText) return Value::unknown();
        return Value::of_text(l.text + *rt);
      }
      case ValueKind::Number: {
        std::optional<std::int64_t> rn;
        if (r.kind == ValueKind::Number) rn = r.number;
        else if (r.kind == ValueKind::Text) rn = parse_integer_text(r.text);
        if (!rn) return Value::unknown();
        std::int64_t sum;
        if (__builtin_add_overflow(l.number, *rn, &sum)) return Value::unknown();
        return Value::of_number(sum);
      }
      case ValueKind::TextList: {
        auto items = l.items;
        if (r.kind == ValueKind::TextList) {
          items.insert(items.end(), r.items.begin(), r.items.end());
        } else {
          auto rt = to_text(r);
          if (!rt) return Value::unknown();
          items.push_back(*rt);
        }
        return Value::of_list(std::move(items));
      }
      default:
        return Value::unknown();
    }
  }

  // Formats arguments: a lone list argument spreads into the argument list.
  std::optional<std::vector<std::string>> text_args(const std::vector<Expr>& args, bool spread) {
    std::vector<Value> values;
    for (const auto& a : args) values.push_back(fold(a));
    std::vector<std::string> out;
    if (spread && values.size() == 1 && values[0].kind == ValueKind::TextList)
      return values[0].items;
    for (const auto& v : values) {
      auto t = to_text(v);
      if (!t) return std::nullopt;
      out.push_back(std::move(*t));
    }
    return out;
  }

  Value fold_node(const FormatOp& n, const Expr&) {
    Value fmt = fold_box(n.format);
    auto args = text_args(n.args, true);
    auto ft = to_text(fmt);
    if (!ft || !args) return Value::unknown();
    try {
      return counted(Value::of_text(eval_format(*ft, *args)));
    } catch (const EvalError&) {
      return Value::unknown();
    }
  }

  Value charcast(const Value& code) {
    try {
      if (code.kind == ValueKind::Number) return Value::of_text(eval_charcast(code.number));
      if (code.kind == ValueKind::Text) {
        if (auto cp = single_codepoint(code.text)) return Value::of_text(code.text);
        if (auto n = parse_integer_text(code.text)) return Value::of_text(eval_charcast(*n));
      }
    } catch (const EvalError&) {
    }
    return Value::unknown();
  }

  Value fold_node(const CharCast& n, const Expr&) { return counted(charcast(fold_box(n.code))); }

  Value fold_node(const TypeCast& n, const Expr&) {
    if (!n.inner) return Value::of_type(n.type_name);
    Value inner = fold(*n.inner);
    if (!inner.known()) return Value::unknown();
    const std::string t = strip_system(n.type_name);
    if (t == "string") {
      auto s = to_text(inner);
      return s ? counted(Value::of_text(*s)) : Value::unknown();
    }
    if (t == "char") return counted(charcast(inner));
    if (t == "int" || t == "int32" || t == "int64" || t == "long") {
      std::optional<std::int64_t> v;
      if (inner.kind == ValueKind::Number) v = inner.number;
      else if (inner.kind == ValueKind::Text) v = parse_integer_text(inner.text);
      if (!v) return Value::unknown();
      if ((t == "int" || t == "int32") &&
          (*v < std::numeric_limits<std::int32_t>::min() || *v > std::numeric_limits<std::int32_t>::max()))
        return Value::unknown();
      return counted(Value::of_number(*v));
    }
    if (t == "type") {
      if (inner.kind == ValueKind::TypeName) return inner;
      if (inner.kind == ValueKind::Text && is_type_name_text(inner.text))
        return counted(Value::of_type(normalize_identifier(inner.text)));
      return Value::unknown();
    }
    if (t == "string[]") {
      if (inner.kind == ValueKind::TextList) return counted(inner);
      auto s = to_text(inner);
      return s ? counted(Value::of_list({*s})) : Value::unknown();
    }
    return Value::unknown();
  }

  static std::string trim_chars(std::string_view s, std::string_view set, bool front, bool back) {
    std::size_t b = 0, e = s.size();
    if (front)
      while (b < e && set.find(s[b]) != std::string_view::npos) ++b;
    if (back)
      while (e > b && set.find(s[e - 1]) != std::string_view::npos) --e;
    return std::string(s.substr(b, e - b));
  }

  Value string_method(const std::string& subject, const std::string& method,
                      const std::vector<Value>& args) {
    auto arg_text = [&](std::size_t i) { return to_text(args[i]); };
    if (method == "replace" && args.size() == 2) {
      auto a = arg_text(0), b = arg_text(1);
      if (!a || !b) return Value::unknown();
      return Value::of_text(eval_replace(subject, *a, *b));
    }
    if (method == "split" && args.size() == 1) {
      auto sep = arg_text(0);
      if (!sep || args[0].kind == ValueKind::TextList) return Value::unknown();
      return Value::of_list(eval_split(subject, *sep));
    }
    if (method == "tostring" && args.empty()) return Value::of_text(subject);
    const bool ascii = detail::is_ascii(subject);
    if ((method == "tolower" || method == "tolowerinvariant") && args.empty() && ascii)
      return Value::of_text(ascii_lower(subject));
    if ((method == "toupper" || method == "toupperinvariant") && args.empty() && ascii) {
      std::string out = subject;
      for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return Value::of_text(out);
    }
    if ((method == "trim" || method == "trimstart" || method == "trimend") && args.size() <= 1) {
      std::string set = " \t\r\n\f\v";
      if (args.size() == 1) {
        auto t = arg_text(0);
        if (!t || !detail::is_ascii(*t)) return Value::unknown();
        set = *t;
      }
      if (!ascii) return Value::unknown();
      return Value::of_text(trim_chars(subject, set, method != "trimend", method != "trimstart"));
    }
    if (method == "substring" && !args.empty() && args.size() <= 2 && ascii) {
      if (args[0].kind != ValueKind::Number) return Value::unknown();
      auto start = args[0].number;
      if (start < 0 || static_cast<std::size_t>(start) > subject.size()) return Value::unknown();
      std::size_t len = subject.size() - static_cast<std::size_t>(start);
      if (args.size() == 2) {
        if (args[1].kind != ValueKind::Number || args[1].number < 0 ||
            static_cast<std::size_t>(args[1].number) > len)
          return Value::unknown();
        len = static_cast<std::size_t>(args[1].number);
      }
      return Value::of_text(subject.substr(static_cast<std::size_t>(start), len));
    }
    return Value::unknown();
  }

  Value fold_node(const MethodCall& n, const Expr&) {
    Value recv = fold_box(n.receiver);
    std::vector<Value> args;
    for (const auto& a : n.args) args.push_back(fold(a));
    if (!recv.known()) return Value::unknown();
    if (std::any_of(args.begin(), args.end(), [](const Value& v) { return !v.known(); }))
      return Value::unknown();
    try {
      if (recv.kind == ValueKind::Text) return counted(string_method(recv.text, n.method, args));
      if (recv.kind == ValueKind::Number && n.method == "tostring" && args.empty())
        return counted(Value::of_text(std::to_string(recv.number)));
    } catch (const EvalError&) {
    }
    return Value::unknown();
  }

  Value fold_node(const StaticCall& n, const Expr&) {
    Value type = fold_box(n.type);
    std::vector<Value> args;
    for (const auto& a : n.args) args.push_back(fold(a));
    if (type.kind != ValueKind::TypeName) return Value::unknown();
    if (strip_system(type.text) != "string") return Value::unknown();
    if (std::any_of(args.begin(), args.end(), [](const Value& v) { return !v.known(); }))
      return Value::unknown();
    auto texts_from = [&](std::size_t first) -> std::optional<std::vector<std::string>> {
      if (args.size() == first + 1 && args[first].kind == ValueKind::TextList) return args[first].items;
      std::vector<std::string> out;
      for (std::size_t i = first; i < args.size(); ++i) {
        auto t = to_text(args[i]);
        if (!t) return std::nullopt;
        out.push_back(*t);
      }
      return out;
    };
    try {
      if (n.member == "join" && args.size() >= 2) {
        auto sep = to_text(args[0]);
        auto items = texts_from(1);
        if (!sep || !items) return Value::unknown();
        std::string out;
        for (std::size_t i = 0; i < items->size(); ++i) {
          if (i) out += *sep;
          out += (*items)[i];
        }
        return counted(Value::of_text(out));
      }
      if (n.member == "concat") {
        auto items = texts_from(0);
        if (!items) return Value::unknown();
        std::string out;
        for (const auto& s : *items) out += s;
        return counted(Value::of_text(out));
      }
      if (n.member == "format" && !args.empty()) {
        auto fmt = to_text(args[0]);
        auto items = texts_from(1);
        if (!fmt || !items) return Value::unknown();
        return counted(Value::of_text(eval_format(*fmt, *items)));
      }
    } catch (const EvalError&) {
    }
    return Value::unknown();
  }

  Value fold_node(const MemberGet& n, const Expr&) {
    if (!n.receiver) return Value::unknown();
    if (!n.is_static && n.member == "value") {
      if (auto gv = detail::as_get_variable(*n.receiver, env_)) {
        if (gv->value_only) return Value::unknown();
        const Value* bound = env_.find(gv->name);
        return bound ? counted(*bound) : Value::unknown();
      }
    }
    Value recv = fold(*n.receiver);
    if (n.is_static) return Value::unknown();
    if (recv.kind == ValueKind::Text && n.member == "length")
      return counted(Value::of_number(static_cast<std::int64_t>(detail::utf16_length(recv.text))));
    if (recv.kind == ValueKind::TextList && (n.member == "length" || n.member == "count"))
      return counted(Value::of_number(static_cast<std::int64_t>(recv.items.size())));
    return Value::unknown();
  }

  Value fold_node(const Index& n, const Expr&) {
    Value target = fold_box(n.target);
    Value idx = fold_box(n.index);
    if (idx.kind != ValueKind::Number) return Value::unknown();
    if (target.kind == ValueKind::TextList) {
      auto size = static_cast<std::int64_t>(target.items.size());
      auto i = idx.number < 0 ? size + idx.number : idx.number;
      if (i < 0 || i >= size) return Value::unknown();
      return counted(Value::of_text(target.items[static_cast<std::size_t>(i)]));
    }
    if (target.kind == ValueKind::Text && detail::is_ascii(target.text)) {
      auto size = static_cast<std::int64_t>(target.text.size());
      auto i = idx.number < 0 ? size + idx.number : idx.number;
      if (i < 0 || i >= size) return Value::unknown();
      return counted(Value::of_text(std::string(1, target.text[static_cast<std::size_t>(i)])));
    }
    return Value::unknown();
  }

  Value fold_node(const CmdletCall& n, const Expr& e) {
    for (const auto& a : n.args) (void)fold(a);
    if (auto gv = detail::as_get_variable(e, env_)) {
      if (!gv->value_only) return Value::unknown();
      const Value* bound = env_.find(gv->name);
      return bound ? counted(*bound) : Value::unknown();
    }
    return Value::unknown();
  }

  Value fold_node(const ArrayLit& n, const Expr&) {
    std::vector<std::string> items;
    bool ok = true;
    for (const auto& item : n.items) {
      Value v = fold(item);
      if (v.kind == ValueKind::TextList) {
        items.insert(items.end(), v.items.begin(), v.items.end());
        continue;
      }
      auto t = v.kind == ValueKind::Text ? std::optional<std::string>(v.text) : std::nullopt;
      if (!t) ok = false;
      else items.push_back(*t);
    }
    if (!ok) return Value::unknown();
    return Value::of_list(std::move(items));
  }

  static std::optional<std::string> join_value(const Value& v, std::string_view sep) {
    if (v.kind == ValueKind::TextList) {
      std::string out;
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += sep;
        out += v.items[i];
      }
      return out;
    }
    return v.kind == ValueKind::TypeName ? std::nullopt : to_text(v);
  }

  Value fold_node(const UnaryOp& n, const Expr&) {
    Value v = fold_box(n.operand);
    if (!v.known()) return Value::unknown();
    if (n.op == "-") {
      std::optional<std::int64_t> x;
      if (v.kind == ValueKind::Number) x = v.number;
      else if (v.kind == ValueKind::Text) x = parse_integer_text(v.text);
      if (!x || *x == std::numeric_limits<std::int64_t>::min()) return Value::unknown();
      return Value::of_number(-*x);
    }
    if (n.op == "-join") {
      auto s = join_value(v, "");
      return s ? counted(Value::of_text(*s)) : Value::unknown();
    }
    return Value::unknown();
  }

  Value fold_node(const BinaryOp& n, const Expr&) {
    Value l = fold_box(n.left);
    Value r = fold_box(n.right);
    if (!l.known() || !r.known()) return Value::unknown();
    if (n.op == "-join") {
      auto sep = to_text(r);
      if (!sep || r.kind == ValueKind::TextList) return Value::unknown();
      auto s = join_value(l, *sep);
      return s ? counted(Value::of_text(*s)) : Value::unknown();
    }
    if (n.op == "*" && l.kind == ValueKind::Text && r.kind == ValueKind::Number) {
      if (r.number < 0 || l.text.size() * static_cast<std::size_t>(r.number) > kMaxText)
        return Value::unknown();
      std::string out;
      for (std::int64_t i = 0; i < r.number; ++i) out += l.text;
      return counted(Value::of_text(out));
    }
    if (l.kind == ValueKind::Number && r.kind == ValueKind::Number) {
      std::int64_t out;
      if (n.op == "-") {
        if (__builtin_sub_overflow(l.number, r.number, &out)) return Value::unknown();
        return counted(Value::of_number(out));
      }
      if (n.op == "*") {
        if (__builtin_mul_overflow(l.number, r.number, &out)) return Value::unknown();
        return counted(Value::of_number(out));
      }
      if (n.op == "/" || n.op == "%") {
        if (r.number == 0 || (l.number == std::numeric_limits<std::int64_t>::min() && r.number == -1))
          return Value::unknown();
        if (n.op == "%") return counted(Value::of_number(l.number % r.number));
        if (l.number % r.number != 0) return Value::unknown();  // would be a double
        return counted(Value::of_number(l.number / r.number));
      }
    }
    return Value::unknown();
  }
};

}  // namespace

Value fold_expr(const Expr& expr, const Environment& env, FoldStats* stats) {
  try {
    return Folder(env, stats).fold(expr);
  } catch (const std::exception&) {
    return Value::unknown();
  }
}

}  // namespace psdeob

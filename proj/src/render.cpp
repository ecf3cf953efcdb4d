// SPDX-License-Identifier: Apache-2.0
#include <cctype>
#include <string>

#include "eval_internal.hpp"
#include "psdeob/lexer.hpp"

namespace psdeob {

namespace {

constexpr int kPrimary = 9;
constexpr int kPostfix = 8;
constexpr int kUnary = 7;
constexpr int kMultiplicative = 6;
constexpr int kAdditive = 5;
constexpr int kFormat = 4;
constexpr int kComparison = 3;
constexpr int kLogical = 2;
constexpr int kCommand = 0;

bool is_plain_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (!(std::isalnum(u) || c == '_')) return false;
  }
  return true;
}

bool is_logical(std::string_view op) {
  return op == "-and" || op == "-or" || op == "-xor";
}

bool is_multiplicative(std::string_view op) { return op == "*" || op == "/" || op == "%"; }

std::string render_variable(std::string_view display) {
  if (display == "?" || display == "^" || display == "$") return "$" + std::string(display);
  auto colon = display.find(':');
  bool plain = colon == std::string_view::npos
                   ? is_plain_identifier(display)
                   : is_plain_identifier(display.substr(0, colon)) &&
                         is_plain_identifier(display.substr(colon + 1));
  if (plain) return "$" + std::string(display);
  return "${" + std::string(display) + "}";
}

std::string member_name(std::string_view name) {
  if (is_plain_identifier(name)) return std::string(name);
  return quote_ps_string(name);
}

int precedence(const Expr& e) {
  if (auto* n = e.as<Number>()) return !n->raw.empty() && n->raw[0] == '-' ? kUnary : kPrimary;
  if (auto* t = e.as<TypeCast>()) return t->inner ? kUnary : kPrimary;
  if (e.is<UnaryOp>() || e.is<CharCast>()) return kUnary;
  if (e.is<MethodCall>() || e.is<StaticCall>() || e.is<MemberGet>() || e.is<Index>())
    return kPostfix;
  if (e.is<Concat>()) return kAdditive;
  if (e.is<FormatOp>()) return kFormat;
  if (auto* b = e.as<BinaryOp>()) {
    if (is_multiplicative(b->op)) return kMultiplicative;
    if (b->op == "+" || b->op == "-") return kAdditive;
    if (is_logical(b->op)) return kLogical;
    return kComparison;
  }
  if (e.is<CmdletCall>()) return kCommand;
  return kPrimary;
}

class Renderer {
 public:
  explicit Renderer(const RenderOptions& options) : opt_(options) {}

  std::string expr(const Expr& e, int min_prec = kCommand) {
    std::string s = raw_expr(e);
    if (precedence(e) < min_prec) return "(" + s + ")";
    return s;
  }

  void block(const Block& b, int depth, std::string& out) {
    for (const auto& s : b) stmt(s, depth, out);
  }

 private:
  const RenderOptions& opt_;

  std::string string_literal(const std::string& text) {
    if (!opt_.trim_trailing_separators) return quote_ps_string(text);
    std::string t = text;
    while (!t.empty() && (t.back() == '\\' || t.back() == '/')) t.pop_back();
    return quote_ps_string(t);
  }

  std::string list(const std::vector<Expr>& xs, int min_prec) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ", ";
      s += expr(xs[i], min_prec);
    }
    return s;
  }

  std::string receiver(const Box<Expr>& r) {
    if (!r) return "";
    const Expr& e = *r;
    if (e.is<Number>()) return "(" + raw_expr(e) + ")";
    if (auto* s = e.as<StringLit>(); s && s->bare) return "(" + raw_expr(e) + ")";
    return expr(e, kPostfix);
  }

  std::string command_part(const Expr& e) {
    if (auto* s = e.as<StringLit>(); s && s->bare) return s->text;
    return expr(e, kUnary);
  }

  std::string raw_expr(const Expr& e) {
    return std::visit(
        [&](const auto& n) -> std::string {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, StringLit>) {
            return string_literal(n.text);
          } else if constexpr (std::is_same_v<T, Number>) {
            return n.raw;
          } else if constexpr (std::is_same_v<T, VarRef>) {
            return render_variable(n.display.empty() ? n.name : n.display);
          } else if constexpr (std::is_same_v<T, Concat>) {
            return expr(*n.left, kAdditive) + " + " + expr(*n.right, kMultiplicative);
          } else if constexpr (std::is_same_v<T, FormatOp>) {
            return expr(*n.format, kAdditive) + " -f " + list(n.args, kAdditive);
          } else if constexpr (std::is_same_v<T, CharCast>) {
            return "[char]" + expr(*n.code, kUnary);
          } else if constexpr (std::is_same_v<T, TypeCast>) {
            std::string s = "[" + n.type_name + "]";
            if (n.inner) s += expr(*n.inner, kUnary);
            return s;
          } else if constexpr (std::is_same_v<T, MethodCall>) {
            return receiver(n.receiver) + "." + member_name(n.method) + "(" + list(n.args, kLogical) + ")";
          } else if constexpr (std::is_same_v<T, StaticCall>) {
            return receiver(n.type) + "::" + member_name(n.member) + "(" + list(n.args, kLogical) + ")";
          } else if constexpr (std::is_same_v<T, MemberGet>) {
            return receiver(n.receiver) + (n.is_static ? "::" : ".") + member_name(n.member);
          } else if constexpr (std::is_same_v<T, Index>) {
            return receiver(n.target) + "[" + expr(*n.index, kLogical) + "]";
          } else if constexpr (std::is_same_v<T, CmdletCall>) {
            std::string s;
            if (!n.invoke_op.empty()) s = n.invoke_op + " " + expr(*n.name, kPostfix);
            else s = command_part(*n.name);
            for (const auto& a : n.args) s += " " + command_part(a);
            return s;
          } else if constexpr (std::is_same_v<T, Paren>) {
            return "(" + expr(*n.inner) + ")";
          } else if constexpr (std::is_same_v<T, ArrayLit>) {
            return "@(" + list(n.items, kLogical) + ")";
          } else if constexpr (std::is_same_v<T, UnaryOp>) {
            std::string operand = expr(*n.operand, kUnary);
            if (n.op == "!") return "!" + operand;
            if (n.op == "-") return operand.starts_with("-") ? "- " + operand : "-" + operand;
            return n.op + " " + operand;
          } else if constexpr (std::is_same_v<T, BinaryOp>) {
            const int p = precedence(e);
            return expr(*n.left, p) + " " + n.op + " " + expr(*n.right, p + 1);
          } else {
            return n.raw;
          }
        },
        e.node);
  }

  void line(int depth, const std::string& text, std::string& out) {
    out.append(static_cast<std::size_t>(depth) * 4, ' ');
    out += text;
    out += '\n';
  }

  void stmt(const Stmt& s, int depth, std::string& out) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Assign>) {
            line(depth, render_variable(n.display.empty() ? n.name : n.display) + " = " + expr(n.value) + ";", out);
          } else if constexpr (std::is_same_v<T, MemberAssign>) {
            line(depth, expr(n.target, kPostfix) + " = " + expr(n.value) + ";", out);
          } else if constexpr (std::is_same_v<T, ExprStmt>) {
            line(depth, expr(n.expr) + ";", out);
          } else if constexpr (std::is_same_v<T, SetItem>) {
            line(depth, "set-item " + command_part(n.path) + " " + command_part(n.value) + ";", out);
          } else if constexpr (std::is_same_v<T, ForEach>) {
            line(depth, "foreach (" + render_variable(n.var_display.empty() ? n.var : n.var_display) + " in " +
                            expr(n.iterable) + ") {", out);
            block(n.body, depth + 1, out);
            line(depth, "}", out);
          } else if constexpr (std::is_same_v<T, If>) {
            line(depth, "if (" + expr(n.cond) + ") {", out);
            block(n.body, depth + 1, out);
            if (n.has_else) {
              line(depth, "} else {", out);
              block(n.else_body, depth + 1, out);
            }
            line(depth, "}", out);
          } else if constexpr (std::is_same_v<T, TryCatch>) {
            line(depth, "try {", out);
            block(n.try_body, depth + 1, out);
            if (n.has_catch) {
              line(depth, n.catch_type.empty() ? "} catch {" : "} catch [" + n.catch_type + "] {", out);
              block(n.catch_body, depth + 1, out);
            }
            if (n.has_finally) {
              line(depth, "} finally {", out);
              block(n.finally_body, depth + 1, out);
            }
            line(depth, "}", out);
          } else if constexpr (std::is_same_v<T, Break>) {
            line(depth, n.keyword + ";", out);
          } else {
            line(depth, n.raw, out);
          }
        },
        s.node);
  }
};

bool is_single_quote_like(char32_t c) {
  return c == U'\'' || c == U'‘' || c == U'’' || c == U'‚' || c == U'‛';
}

bool is_double_quote_like(char32_t c) {
  return c == U'"' || c == U'“' || c == U'”' || c == U'„';
}

char escape_letter(char32_t c) {
  switch (c) {
    case 0: return '0';
    case 7: return 'a';
    case 8: return 'b';
    case 9: return 't';
    case 10: return 'n';
    case 11: return 'v';
    case 12: return 'f';
    case 13: return 'r';
    case 27: return 'e';
    default: return 0;
  }
}

bool is_control(char32_t c) { return c < 0x20 || c == 0x7f; }

// Decodes one UTF-8 sequence; invalid bytes come back as themselves.
char32_t next_codepoint(std::string_view s, std::size_t& i, std::size_t& len) {
  auto b = static_cast<unsigned char>(s[i]);
  len = b < 0x80 ? 1 : b >= 0xf0 ? 4 : b >= 0xe0 ? 3 : b >= 0xc0 ? 2 : 1;
  if (i + len > s.size()) len = 1;
  if (len == 1) return b;
  char32_t cp = b & (0x3f >> (len - 1));
  for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3f);
  return cp;
}

std::string single_quoted(std::string_view text) {
  std::string out = "'";
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = 1;
    char32_t cp = next_codepoint(text, i, len);
    std::string_view piece = text.substr(i, len);
    if (is_single_quote_like(cp)) out += piece;
    out += piece;
    i += len;
  }
  out += '\'';
  return out;
}

}  // namespace

std::string quote_ps_string(std::string_view text) {
  bool has_control = false;
  bool needs_concat = false;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = 1;
    char32_t cp = next_codepoint(text, i, len);
    if (is_control(cp)) {
      has_control = true;
      if (!escape_letter(cp)) needs_concat = true;
    }
    i += len;
  }
  if (!has_control) return single_quoted(text);
  if (needs_concat) {
    // Some control characters have no escape; spell them as [char] casts.
    std::string out = "(";
    std::string run;
    bool first = true;
    auto flush = [&] {
      if (run.empty()) return;
      if (!first) out += " + ";
      out += quote_ps_string(run);
      first = false;
      run.clear();
    };
    for (std::size_t i = 0; i < text.size();) {
      std::size_t len = 1;
      char32_t cp = next_codepoint(text, i, len);
      if (is_control(cp) && !escape_letter(cp)) {
        flush();
        // a leading cast would make the whole chain numeric
        out += first ? "'' + " : " + ";
        out += "[char]" + std::to_string(static_cast<unsigned>(cp));
        first = false;
      } else {
        run += text.substr(i, len);
      }
      i += len;
    }
    flush();
    return out + ")";
  }
  std::string out = "\"";
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = 1;
    char32_t cp = next_codepoint(text, i, len);
    if (char e = is_control(cp) ? escape_letter(cp) : 0) {
      out += '`';
      out += e;
    } else {
      if (cp == U'`' || cp == U'$' || is_double_quote_like(cp)) out += '`';
      out += text.substr(i, len);
    }
    i += len;
  }
  out += '"';
  return out;
}

std::string render_expr(const Expr& expr, const RenderOptions& options) {
  return Renderer(options).expr(expr);
}

std::string render_block(const Block& block, const RenderOptions& options) {
  std::string out;
  Renderer(options).block(block, 0, out);
  return out;
}

std::string render_deobfuscated(const DeobResult& result, const RenderOptions& options) {
  return render_block(result.residual.statements, options);
}

}  // namespace psdeob

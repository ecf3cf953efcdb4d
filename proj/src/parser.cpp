// SPDX-License-Identifier: Apache-2.0
#include "psdeob/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "psdeob/error.hpp"

namespace psdeob {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_comparison_op(std::string_view op) {
  static constexpr std::array<std::string_view, 22> kBase = {
      "eq",    "ne",       "gt",    "ge",       "lt",       "le",       "like",  "notlike",
      "match", "notmatch", "contains", "notcontains", "in", "notin",   "replace", "split",
      "join",  "is",       "isnot", "as",       "band",     "bor"};
  if (op.size() < 2 || op[0] != '-') return false;
  std::string_view body = op.substr(1);
  auto known = [](std::string_view b) {
    return std::find(kBase.begin(), kBase.end(), b) != kBase.end();
  };
  if (known(body)) return true;
  // case-sensitive / insensitive prefixed forms: -ceq, -ireplace
  return body.size() > 1 && (body[0] == 'c' || body[0] == 'i') && known(body.substr(1));
}

bool is_logical_op(std::string_view op) { return op == "-and" || op == "-or" || op == "-xor"; }

class Parser {
 public:
  Parser(std::span<const Token> tokens, std::string_view source) : src_(source) {
    toks_.reserve(tokens.size());
    for (const auto& t : tokens)
      if (t.kind != TokenKind::Comment) toks_.push_back(t);
  }

  ScriptAst parse_script() {
    ScriptAst ast;
    ast.source = std::string(src_);
    ast.statements = parse_statements(false);
    return ast;
  }

  Expr parse_lone_expression() {
    skip_separators();
    if (at_end()) throw ParseError("empty expression", 0);
    Expr e = parse_array();
    skip_separators();
    if (!at_end()) throw ParseError("unexpected token '" + cur().text + "'", cur().span.start);
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::string_view src_;
  std::size_t pos_ = 0;
  int paren_depth_ = 0;  // newlines are insignificant inside (...)

  // --- token access -------------------------------------------------------

  void skip_insignificant() {
    if (paren_depth_ <= 0) return;
    while (pos_ < toks_.size() && toks_[pos_].kind == TokenKind::Semicolon &&
           toks_[pos_].text == "\n")
      ++pos_;
  }
  bool at_end() {
    skip_insignificant();
    return pos_ >= toks_.size();
  }
  const Token& cur() {
    skip_insignificant();
    return toks_[pos_];
  }
  const Token* peek_raw(std::size_t ahead) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
  }
  std::size_t offset_here() {
    if (at_end()) return toks_.empty() ? 0 : toks_.back().span.end;
    return cur().span.start;
  }
  [[noreturn]] void fail(const std::string& what) { throw ParseError(what, offset_here()); }

  bool is(TokenKind kind) { return !at_end() && cur().kind == kind; }
  bool is(TokenKind kind, std::string_view text) {
    return !at_end() && cur().kind == kind && cur().text == text;
  }
  bool is_op(std::string_view text) { return is(TokenKind::Operator, text); }
  bool is_keyword(std::string_view kw) {
    return is(TokenKind::Keyword) && lower(cur().text) == kw;
  }
  bool is_separator() { return is(TokenKind::Semicolon); }
  bool is_dash_op() {
    return (is(TokenKind::Operator) || is(TokenKind::FormatOperator)) && cur().text.size() > 1 &&
           cur().text[0] == '-' && std::isalpha(static_cast<unsigned char>(cur().text[1]));
  }
  const Token& advance() {
    skip_insignificant();
    return toks_[pos_++];
  }
  void expect(TokenKind kind, std::string_view text) {
    if (!is(kind, text)) fail("expected '" + std::string(text) + "'");
    advance();
  }
  void skip_separators() {
    while (pos_ < toks_.size() && toks_[pos_].kind == TokenKind::Semicolon) ++pos_;
  }
  void skip_newlines() {
    while (pos_ < toks_.size() && toks_[pos_].kind == TokenKind::Semicolon &&
           toks_[pos_].text == "\n")
      ++pos_;
  }

  std::string raw_slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || begin >= toks_.size()) return {};
    end = std::min(end, toks_.size());
    if (!src_.empty()) {
      auto s = toks_[begin].span.start;
      auto e = toks_[end - 1].span.end;
      if (e <= src_.size() && s < e) return std::string(src_.substr(s, e - s));
    }
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
      if (i > begin) out += ' ';
      out += toks_[i].text;
    }
    return out;
  }

  Expr make(Expr::Node node, std::size_t begin) {
    Expr e;
    e.node = std::move(node);
    e.tokens = {begin, pos_};
    return e;
  }

  // --- statements ---------------------------------------------------------

  Block parse_statements(bool in_block) {
    Block out;
    const int saved_depth = paren_depth_;
    paren_depth_ = 0;
    for (;;) {
      skip_separators();
      if (pos_ >= toks_.size()) {
        if (in_block) {
          paren_depth_ = saved_depth;
          throw ParseError("missing closing '}'", toks_.empty() ? 0 : toks_.back().span.end);
        }
        break;
      }
      if (in_block && toks_[pos_].kind == TokenKind::Brace && toks_[pos_].text == "}") break;
      out.push_back(parse_contained_statement(in_block));
    }
    paren_depth_ = saved_depth;
    return out;
  }

  // Statement-granular error containment: a failure anywhere inside the
  // statement turns its whole token span into an UnknownStmt.
  Stmt parse_contained_statement(bool in_block) {
    const std::size_t start = pos_;
    try {
      bool compound = false;
      Stmt s = parse_statement(compound);
      if (!compound && pos_ < toks_.size() && toks_[pos_].kind != TokenKind::Semicolon &&
          !(in_block && toks_[pos_].kind == TokenKind::Brace && toks_[pos_].text == "}"))
        fail("unexpected token '" + toks_[pos_].text + "'");
      s.tokens = {start, pos_};
      return s;
    } catch (const ParseError&) {
      pos_ = start;
      paren_depth_ = 0;
      recover(in_block);
      Stmt s;
      s.node = UnknownStmt{raw_slice(start, pos_)};
      s.tokens = {start, pos_};
      return s;
    }
  }

  void recover(bool in_block) {
    std::vector<char> stack;
    const std::size_t start = pos_;
    while (pos_ < toks_.size()) {
      const Token& t = toks_[pos_];
      bool opener = (t.kind == TokenKind::Paren && t.text != ")") ||
                    (t.kind == TokenKind::Brace && t.text != "}") ||
                    (t.kind == TokenKind::Operator && t.text == "[");
      bool closer = (t.kind == TokenKind::Paren && t.text == ")") ||
                    (t.kind == TokenKind::Brace && t.text == "}") ||
                    (t.kind == TokenKind::Operator && t.text == "]");
      if (stack.empty()) {
        if (t.kind == TokenKind::Semicolon) break;
        if (in_block && t.kind == TokenKind::Brace && t.text == "}" && pos_ > start) break;
        if (in_block && t.kind == TokenKind::Brace && t.text == "}") break;
      }
      if (opener) {
        stack.push_back(t.text.back());
      } else if (closer && !stack.empty()) {
        stack.pop_back();
      }
      ++pos_;
    }
    if (pos_ == start && pos_ < toks_.size()) ++pos_;  // guarantee progress
  }

  Stmt parse_statement(bool& compound) {
    compound = false;
    Stmt s;
    const Token& t = cur();
    if (t.kind == TokenKind::Keyword) {
      auto kw = lower(t.text);
      if (kw == "foreach") {
        compound = true;
        s.node = parse_foreach();
        return s;
      }
      if (kw == "if") {
        compound = true;
        s.node = parse_if();
        return s;
      }
      if (kw == "try") {
        compound = true;
        s.node = parse_try();
        return s;
      }
      if (kw == "break" || kw == "continue") {
        advance();
        s.node = Break{kw};
        return s;
      }
      fail("unsupported keyword '" + t.text + "'");
    }
    if (t.kind == TokenKind::Variable) {
      const Token* next = peek_raw(1);
      if (next && next->kind == TokenKind::Operator &&
          (next->text == "=" || next->text == "+=")) {
        Token var = advance();
        std::string op = advance().text;
        Assign a;
        a.name = canonical_var_name(var.text);
        a.display = var.text;
        std::size_t rhs_start = pos_;
        Expr rhs = parse_pipeline();
        if (op == "+=") {
          Expr self;
          self.node = VarRef{a.name, a.display};
          self.tokens = {rhs_start - 2, rhs_start - 1};
          Expr cat;
          cat.node = Concat{std::move(self), std::move(rhs)};
          cat.tokens = {rhs_start - 2, pos_};
          rhs = std::move(cat);
        }
        a.value = std::move(rhs);
        s.node = std::move(a);
        return s;
      }
    }
    if (t.kind == TokenKind::CmdletName) {
      auto name = lower(t.text);
      if (name == "set-item" || name == "si") {
        if (auto set = try_parse_set_item()) {
          s.node = std::move(*set);
          return s;
        }
      }
    }
    if (t.kind == TokenKind::Variable || (t.kind == TokenKind::Paren && t.text == "(")) {
      const std::size_t save = pos_;
      try {
        Expr target = parse_postfix();
        if (is_op("=") && (target.is<MemberGet>() || target.is<Index>())) {
          advance();
          Expr value = parse_pipeline();
          s.node = MemberAssign{std::move(target), std::move(value)};
          return s;
        }
      } catch (const ParseError&) {
      }
      pos_ = save;
    }
    s.node = ExprStmt{parse_pipeline()};
    return s;
  }

  std::optional<SetItem> try_parse_set_item() {
    const std::size_t save = pos_;
    try {
      const std::size_t begin = pos_;
      advance();
      std::vector<Expr> positional;
      std::optional<Expr> path, value;
      while (!at_end() && !is_command_terminator()) {
        if (is_dash_op()) {
          auto param = lower(advance().text);
          if (param == "-path" && !at_end()) {
            path = parse_command_arg();
            continue;
          }
          if (param == "-value" && !at_end()) {
            value = parse_command_arg();
            continue;
          }
          throw ParseError("unsupported set-item parameter", offset_here());
        }
        positional.push_back(parse_command_arg());
      }
      for (auto& p : positional) {
        if (!path) path = std::move(p);
        else if (!value) value = std::move(p);
        else throw ParseError("too many set-item arguments", offset_here());
      }
      (void)begin;
      if (path && value) return SetItem{std::move(*path), std::move(*value)};
    } catch (const ParseError&) {
    }
    pos_ = save;
    return std::nullopt;
  }

  Block parse_brace_block() {
    skip_newlines();
    expect(TokenKind::Brace, "{");
    const int saved = paren_depth_;
    Block body = parse_statements(true);
    paren_depth_ = saved;
    if (!(pos_ < toks_.size() && toks_[pos_].kind == TokenKind::Brace && toks_[pos_].text == "}"))
      fail("expected '}'");
    ++pos_;
    return body;
  }

  ForEach parse_foreach() {
    advance();
    expect(TokenKind::Paren, "(");
    ++paren_depth_;
    if (!is(TokenKind::Variable)) fail("expected loop variable");
    Token var = advance();
    if (!is_keyword("in")) fail("expected 'in'");
    advance();
    Expr iterable = parse_pipeline();
    expect(TokenKind::Paren, ")");
    --paren_depth_;
    Block body = parse_brace_block();
    if (body.empty()) fail("empty foreach body");
    return ForEach{canonical_var_name(var.text), var.text, std::move(iterable), std::move(body)};
  }

  If parse_if() {
    advance();  // if / elseif
    expect(TokenKind::Paren, "(");
    ++paren_depth_;
    Expr cond = parse_pipeline();
    expect(TokenKind::Paren, ")");
    --paren_depth_;
    If node;
    node.cond = std::move(cond);
    node.body = parse_brace_block();
    const std::size_t save = pos_;
    skip_newlines();
    if (is_keyword("elseif")) {
      const std::size_t begin = pos_;
      Stmt nested;
      nested.node = parse_if();
      nested.tokens = {begin, pos_};
      node.else_body.push_back(std::move(nested));
      node.has_else = true;
    } else if (is_keyword("else")) {
      advance();
      node.else_body = parse_brace_block();
      node.has_else = true;
    } else {
      pos_ = save;
    }
    return node;
  }

  TryCatch parse_try() {
    advance();
    TryCatch node;
    node.try_body = parse_brace_block();
    skip_newlines();
    bool any = false;
    if (is_keyword("catch")) {
      advance();
      while (is(TokenKind::TypeLiteral)) {
        if (!node.catch_type.empty()) node.catch_type += ",";
        node.catch_type += advance().text;
        if (is_op(",")) advance();
      }
      node.catch_body = parse_brace_block();
      node.has_catch = true;
      any = true;
    }
    const std::size_t save = pos_;
    skip_newlines();
    if (is_keyword("catch")) fail("multiple catch clauses are not supported");
    if (is_keyword("finally")) {
      advance();
      node.finally_body = parse_brace_block();
      node.has_finally = true;
      any = true;
    } else {
      pos_ = save;
    }
    if (!any) fail("try without catch or finally");
    return node;
  }

  // --- commands -----------------------------------------------------------

  bool is_command_terminator() {
    if (at_end()) return true;
    const Token& t = cur();
    if (t.kind == TokenKind::Semicolon) return true;
    if (t.kind == TokenKind::Paren && t.text == ")") return true;
    if (t.kind == TokenKind::Brace && t.text == "}") return true;
    if (t.kind == TokenKind::Operator && (t.text == "|" || t.text == "]")) return true;
    return false;
  }

  // Command or expression; pipelines are outside the subset.
  Expr parse_pipeline() {
    Expr e = parse_command_or_expression();
    if (is_op("|")) fail("pipelines are not supported");
    return e;
  }

  Expr parse_command_or_expression() {
    if (at_end()) fail("expected expression");
    const Token& t = cur();
    const std::size_t begin = pos_;
    if (t.kind == TokenKind::CmdletName) {
      Token name = advance();
      Expr n;
      n.node = StringLit{name.text, true};
      n.tokens = {begin, pos_};
      return parse_command(std::move(n), "", begin);
    }
    if (t.kind == TokenKind::Operator && (t.text == "&" || t.text == ".")) {
      std::string op = advance().text;
      Expr name = parse_command_name();
      return parse_command(std::move(name), op, begin);
    }
    return parse_array();
  }

  Expr parse_command_name() {
    if (at_end()) fail("expected command name");
    const std::size_t begin = pos_;
    if (is(TokenKind::CmdletName)) {
      Token name = advance();
      return make(StringLit{name.text, true}, begin);
    }
    return parse_postfix();
  }

  Expr parse_command(Expr name, std::string op, std::size_t begin) {
    CmdletCall call;
    call.name = std::move(name);
    call.invoke_op = std::move(op);
    while (!is_command_terminator()) {
      const std::size_t arg_begin = pos_;
      Expr arg = parse_command_arg();
      if (is_op(",")) {
        ArrayLit arr;
        arr.items.push_back(std::move(arg));
        while (is_op(",")) {
          advance();
          arr.items.push_back(parse_command_arg());
        }
        arg = make(std::move(arr), arg_begin);
      }
      call.args.push_back(std::move(arg));
    }
    return make(std::move(call), begin);
  }

  Expr parse_command_arg() {
    if (at_end()) fail("expected argument");
    const std::size_t begin = pos_;
    const Token& t = cur();
    if (is_dash_op()) {
      Token p = advance();
      return make(StringLit{p.text, true}, begin);
    }
    if (t.kind == TokenKind::CmdletName || t.kind == TokenKind::Keyword) {
      Token w = advance();
      return make(StringLit{w.text, true}, begin);
    }
    if (t.kind == TokenKind::Operator && t.text != "-" && t.text != "[") {
      fail("unexpected operator '" + t.text + "' in command arguments");
    }
    return parse_unary();
  }

  // --- expressions (lowest to highest precedence) -------------------------

  Expr parse_array() {
    const std::size_t begin = pos_;
    Expr first = parse_logical();
    if (!is_op(",")) return first;
    ArrayLit arr;
    arr.items.push_back(std::move(first));
    while (is_op(",")) {
      advance();
      skip_newlines();
      arr.items.push_back(parse_logical());
    }
    return make(std::move(arr), begin);
  }

  Expr parse_logical() {
    const std::size_t begin = pos_;
    Expr left = parse_comparison();
    while (is(TokenKind::Operator) && is_logical_op(lower(cur().text))) {
      auto op = lower(advance().text);
      skip_newlines();
      Expr right = parse_comparison();
      left = make(BinaryOp{op, std::move(left), std::move(right)}, begin);
    }
    return left;
  }

  Expr parse_comparison() {
    const std::size_t begin = pos_;
    Expr left = parse_format();
    while (is(TokenKind::Operator) && is_comparison_op(lower(cur().text))) {
      auto op = lower(advance().text);
      skip_newlines();
      const std::size_t rbegin = pos_;
      Expr right = parse_format();
      if (is_op(",")) {
        ArrayLit arr;
        arr.items.push_back(std::move(right));
        while (is_op(",")) {
          advance();
          arr.items.push_back(parse_format());
        }
        right = make(std::move(arr), rbegin);
      }
      left = make(BinaryOp{op, std::move(left), std::move(right)}, begin);
    }
    return left;
  }

  Expr parse_format() {
    const std::size_t begin = pos_;
    Expr left = parse_additive();
    while (is(TokenKind::FormatOperator)) {
      advance();
      skip_newlines();
      FormatOp f;
      f.format = std::move(left);
      f.args.push_back(parse_additive());
      while (is_op(",")) {
        advance();
        skip_newlines();
        f.args.push_back(parse_additive());
      }
      left = make(std::move(f), begin);
    }
    return left;
  }

  Expr parse_additive() {
    const std::size_t begin = pos_;
    Expr left = parse_multiplicative();
    while (is_op("+") || is_op("-")) {
      bool plus = advance().text == "+";
      skip_newlines();
      Expr right = parse_multiplicative();
      if (plus)
        left = make(Concat{std::move(left), std::move(right)}, begin);
      else
        left = make(BinaryOp{"-", std::move(left), std::move(right)}, begin);
    }
    return left;
  }

  Expr parse_multiplicative() {
    const std::size_t begin = pos_;
    Expr left = parse_unary();
    while (is_op("*") || is_op("/") || is_op("%")) {
      auto op = advance().text;
      skip_newlines();
      Expr right = parse_unary();
      left = make(BinaryOp{op, std::move(left), std::move(right)}, begin);
    }
    return left;
  }

  bool starts_operand() {
    if (at_end()) return false;
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::StringLiteral:
      case TokenKind::Variable:
      case TokenKind::Number:
      case TokenKind::TypeLiteral:
        return true;
      case TokenKind::Paren:
        return t.text != ")";
      case TokenKind::Operator:
        return t.text == "-" || t.text == "!";
      default:
        return false;
    }
  }

  Expr parse_unary() {
    if (at_end()) fail("expected expression");
    const std::size_t begin = pos_;
    const Token& t = cur();
    if (t.kind == TokenKind::Operator) {
      auto op = lower(t.text);
      if (op == "!" || op == "-" || op == "-not" || op == "-join" || op == "-split" ||
          op == "-bnot") {
        advance();
        Expr operand = parse_unary();
        return make(UnaryOp{op, std::move(operand)}, begin);
      }
    }
    if (t.kind == TokenKind::TypeLiteral) {
      Token type = advance();
      auto name = normalize_identifier(type.text);
      Expr bare = make(TypeCast{name, {}}, begin);
      if (is_op("::") || is_op(".")) return parse_postfix_from(std::move(bare), begin);
      if (!starts_operand()) return bare;
      Expr operand = parse_unary();
      if (name == "char") return make(CharCast{std::move(operand)}, begin);
      return make(TypeCast{name, std::move(operand)}, begin);
    }
    return parse_postfix();
  }

  Expr parse_postfix() {
    const std::size_t begin = pos_;
    Expr prim = parse_primary();
    return parse_postfix_from(std::move(prim), begin);
  }

  bool adjacent_call_paren() {
    if (pos_ >= toks_.size() || pos_ == 0) return false;
    const Token& t = toks_[pos_];
    return t.kind == TokenKind::Paren && t.text == "(" &&
           t.span.start == toks_[pos_ - 1].span.end;
  }

  Expr parse_postfix_from(Expr e, std::size_t begin) {
    for (;;) {
      if (pos_ >= toks_.size()) break;
      const Token& t = toks_[pos_];
      const Token* next = peek_raw(1);
      if (t.kind == TokenKind::Operator && (t.text == "." || t.text == "::") && next &&
          next->kind == TokenKind::MemberAccess) {
        const bool is_static = t.text == "::";
        pos_ += 2;
        auto member = normalize_identifier(next->text);
        if (adjacent_call_paren()) {
          auto args = parse_call_args();
          if (is_static)
            e = make(StaticCall{std::move(e), member, std::move(args)}, begin);
          else
            e = make(MethodCall{std::move(e), member, std::move(args)}, begin);
        } else {
          e = make(MemberGet{std::move(e), member, is_static}, begin);
        }
        continue;
      }
      if (t.kind == TokenKind::Operator && t.text == "[" && pos_ > 0 &&
          t.span.start == toks_[pos_ - 1].span.end) {
        ++pos_;
        ++paren_depth_;
        Expr idx = parse_array();
        if (!is_op("]")) fail("expected ']'");
        advance();
        --paren_depth_;
        e = make(Index{std::move(e), std::move(idx)}, begin);
        continue;
      }
      break;
    }
    return e;
  }

  std::vector<Expr> parse_call_args() {
    expect(TokenKind::Paren, "(");
    ++paren_depth_;
    std::vector<Expr> args;
    if (!is(TokenKind::Paren, ")")) {
      for (;;) {
        args.push_back(parse_logical());
        if (is_op(",")) {
          advance();
          continue;
        }
        break;
      }
    }
    expect(TokenKind::Paren, ")");
    --paren_depth_;
    return args;
  }

  static std::optional<std::int64_t> parse_int(std::string_view raw) {
    std::int64_t v = 0;
    if (raw.size() > 2 && raw[0] == '0' && (raw[1] == 'x' || raw[1] == 'X')) {
      auto [p, ec] = std::from_chars(raw.data() + 2, raw.data() + raw.size(), v, 16);
      if (ec != std::errc() || p != raw.data() + raw.size()) return std::nullopt;
      return v;
    }
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || p != raw.data() + raw.size()) return std::nullopt;
    return v;
  }

  Expr expandable_string(const Token& t, std::size_t begin) {
    // "$a-$b" -> '' + $a + '-' + $b, keeping string semantics for the result
    Expr acc = make(StringLit{""}, begin);
    bool first = true;
    for (const auto& part : t.parts) {
      Expr piece;
      piece.tokens = {begin, pos_};
      if (part.is_variable)
        piece.node = VarRef{canonical_var_name(part.text), part.text};
      else
        piece.node = StringLit{part.text};
      if (first && !part.is_variable) {
        acc = std::move(piece);
      } else {
        acc = make(Concat{std::move(acc), std::move(piece)}, begin);
      }
      first = false;
    }
    return acc;
  }

  Expr parse_primary() {
    if (at_end()) fail("expected expression");
    const std::size_t begin = pos_;
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::StringLiteral: {
        Token s = advance();
        if (s.has_subexpression) return make(UnknownExpr{raw_slice(begin, pos_)}, begin);
        if (s.expandable) return expandable_string(s, begin);
        return make(StringLit{s.text}, begin);
      }
      case TokenKind::Number: {
        Token n = advance();
        return make(Number{n.text, parse_int(n.text)}, begin);
      }
      case TokenKind::Variable: {
        Token v = advance();
        return make(VarRef{canonical_var_name(v.text), v.text}, begin);
      }
      case TokenKind::TypeLiteral: {
        Token type = advance();
        return make(TypeCast{normalize_identifier(type.text), {}}, begin);
      }
      case TokenKind::Paren: {
        if (t.text == "(" || t.text == "$(") {
          advance();
          ++paren_depth_;
          Expr inner = parse_pipeline();
          if (!is(TokenKind::Paren, ")")) fail("expected ')'");
          advance();
          --paren_depth_;
          return make(Paren{std::move(inner)}, begin);
        }
        if (t.text == "@(") {
          advance();
          ++paren_depth_;
          ArrayLit arr;
          while (!is(TokenKind::Paren, ")")) {
            if (at_end()) fail("expected ')'");
            if (is_separator()) {
              advance();
              continue;
            }
            Expr item = parse_pipeline();
            if (auto* nested = item.as<ArrayLit>()) {
              for (auto& x : nested->items) arr.items.push_back(std::move(x));
            } else {
              arr.items.push_back(std::move(item));
            }
          }
          advance();
          --paren_depth_;
          return make(std::move(arr), begin);
        }
        break;
      }
      default:
        break;
    }
    fail("unexpected token '" + t.text + "'");
  }
};

}  // namespace

std::string canonical_var_name(std::string_view raw) {
  std::string name = normalize_identifier(raw);
  for (std::string_view scope : {"script:", "global:", "local:", "private:", "variable:"}) {
    if (name.rfind(scope, 0) == 0) {
      name.erase(0, scope.size());
      break;
    }
  }
  return name;
}

std::size_t count_unknown_statements(const Block& block) {
  std::size_t n = 0;
  for (const auto& s : block) {
    if (s.is<UnknownStmt>()) ++n;
    if (auto* f = s.as<ForEach>()) n += count_unknown_statements(f->body);
    if (auto* i = s.as<If>()) n += count_unknown_statements(i->body) + count_unknown_statements(i->else_body);
    if (auto* t = s.as<TryCatch>())
      n += count_unknown_statements(t->try_body) + count_unknown_statements(t->catch_body) +
           count_unknown_statements(t->finally_body);
  }
  return n;
}

ScriptAst parse_script(std::span<const Token> tokens, std::string_view source) {
  return Parser(tokens, source).parse_script();
}

Expr parse_expression(std::span<const Token> tokens, std::string_view source) {
  return Parser(tokens, source).parse_lone_expression();
}

ScriptAst parse_source(std::string_view text) {
  std::string stripped = strip_comments(text);
  try {
    auto tokens = tokenize(stripped);
    return parse_script(tokens, stripped);
  } catch (const LexError&) {
    ScriptAst ast;
    ast.source = stripped;
    if (stripped.find_first_not_of(" \t\r\n") != std::string::npos) {
      Stmt s;
      s.node = UnknownStmt{stripped};
      ast.statements.push_back(std::move(s));
    }
    return ast;
  }
}

}  // namespace psdeob

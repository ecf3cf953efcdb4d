// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <unordered_set>

#include "eval_internal.hpp"
#include "psdeob/error.hpp"
#include "psdeob/lexer.hpp"
#include "psdeob/parser.hpp"

namespace psdeob {

using detail::ascii_lower;

namespace {

std::vector<Token> tokens_of(std::string_view raw) {
  try {
    return tokenize(raw);
  } catch (const LexError&) {
    return {};
  }
}

// Variables an unparsed statement may assign.
std::set<std::string> assigned_in_raw(std::string_view raw) {
  std::set<std::string> out;
  auto toks = tokens_of(raw);
  static constexpr std::array<std::string_view, 8> kAssignOps = {"=",  "+=", "-=", "*=",
                                                                 "/=", "%=", "++", "--"};
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    if (t.kind == TokenKind::Variable) {
      bool before = i + 1 < toks.size() && toks[i + 1].kind == TokenKind::Operator &&
                    std::find(kAssignOps.begin(), kAssignOps.end(), toks[i + 1].text) != kAssignOps.end();
      bool after = i > 0 && toks[i - 1].kind == TokenKind::Operator &&
                   (toks[i - 1].text == "++" || toks[i - 1].text == "--");
      if (before || after) out.insert(canonical_var_name(t.text));
    }
    if (t.kind == TokenKind::CmdletName) {
      auto name = ascii_lower(t.text);
      if ((name == "set-variable" || name == "sv" || name == "new-variable" || name == "nv" ||
           name == "set-item" || name == "si") &&
          i + 1 < toks.size())
        out.insert(canonical_var_name(toks[i + 1].text));
    }
  }
  return out;
}

// Every name an unparsed fragment could possibly read.
void reads_in_raw(std::string_view raw, std::set<std::string>& out) {
  for (const auto& t : tokens_of(raw)) {
    if (t.kind == TokenKind::Variable || t.kind == TokenKind::CmdletName ||
        t.kind == TokenKind::StringLiteral)
      out.insert(canonical_var_name(t.text));
    if (t.kind == TokenKind::StringLiteral)
      for (const auto& p : t.parts)
        if (p.is_variable) out.insert(canonical_var_name(p.text));
  }
}

std::optional<std::string> set_item_variable(const SetItem& s, const Environment& env) {
  Value path = fold_expr(s.path, env);
  if (path.kind != ValueKind::Text) return std::nullopt;
  if (ascii_lower(path.text).rfind("variable:", 0) != 0) return std::nullopt;
  std::string name = path.text.substr(9);
  if (name.empty()) return std::nullopt;
  return name;
}

bool is_keyword_word(std::string_view w) {
  auto toks = tokens_of(w);
  return toks.size() != 1 || toks[0].kind != TokenKind::CmdletName || toks[0].text != w;
}

// A folded command name that can be written as a plain command word.
bool is_command_word(std::string_view w) {
  if (w.empty() || !std::isalpha(static_cast<unsigned char>(w[0]))) return false;
  for (char c : w) {
    auto u = static_cast<unsigned char>(c);
    if (!(std::isalnum(u) || c == '-' || c == '_' || c == '.')) return false;
  }
  return !is_keyword_word(w);
}

void collect_assigned(const Block& block, const Environment& env, std::set<std::string>& out) {
  for (const auto& s : block) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Assign>) {
            out.insert(n.name);
          } else if constexpr (std::is_same_v<T, ForEach>) {
            out.insert(n.var);
            collect_assigned(n.body, env, out);
          } else if constexpr (std::is_same_v<T, If>) {
            collect_assigned(n.body, env, out);
            collect_assigned(n.else_body, env, out);
          } else if constexpr (std::is_same_v<T, TryCatch>) {
            collect_assigned(n.try_body, env, out);
            collect_assigned(n.catch_body, env, out);
            collect_assigned(n.finally_body, env, out);
          } else if constexpr (std::is_same_v<T, SetItem>) {
            if (auto name = set_item_variable(n, env)) out.insert(canonical_var_name(*name));
          } else if constexpr (std::is_same_v<T, UnknownStmt>) {
            auto names = assigned_in_raw(n.raw);
            out.insert(names.begin(), names.end());
          }
        },
        s.node);
  }
}

bool is_protected_name(std::string_view name) {
  if (name.find(':') != std::string_view::npos) return true;
  if (name.size() >= 10 && name.substr(name.size() - 10) == "preference") return true;
  return name == "ofs" || name == "psdefaultparametervalues" || name == "null";
}

class Runner {
 public:
  DeobResult& out;

  explicit Runner(DeobResult& result) : out(result) {}

  Block run_block(const Block& in, Environment& env) {
    Block block;
    block.reserve(in.size());
    for (const auto& s : in) block.push_back(run_stmt(s, env));
    return block;
  }

 private:
  std::unordered_set<std::string> pooled_;

  void add_pool(const std::string& s) {
    if (s.empty()) return;
    if (pooled_.insert(s).second) out.string_pool.push_back(s);
  }
  void add_pool(const Value& v) {
    if (v.kind == ValueKind::Text) add_pool(v.text);
    if (v.kind == ValueKind::TextList)
      for (const auto& s : v.items) add_pool(s);
  }

  void record_evidence(const Expr& e, const Environment& env) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          auto sub = [&](const Box<Expr>& b) {
            if (b) record_evidence(*b, env);
          };
          auto subs = [&](const std::vector<Expr>& xs) {
            for (const auto& x : xs) record_evidence(x, env);
          };
          if constexpr (std::is_same_v<T, Concat>) {
            sub(n.left);
            sub(n.right);
          } else if constexpr (std::is_same_v<T, FormatOp>) {
            sub(n.format);
            subs(n.args);
          } else if constexpr (std::is_same_v<T, CharCast>) {
            sub(n.code);
          } else if constexpr (std::is_same_v<T, TypeCast>) {
            sub(n.inner);
          } else if constexpr (std::is_same_v<T, MethodCall>) {
            out.evidence.methods.insert(n.method);
            sub(n.receiver);
            subs(n.args);
          } else if constexpr (std::is_same_v<T, StaticCall>) {
            out.evidence.methods.insert(n.member);
            sub(n.type);
            subs(n.args);
          } else if constexpr (std::is_same_v<T, MemberGet>) {
            sub(n.receiver);
          } else if constexpr (std::is_same_v<T, Index>) {
            sub(n.target);
            sub(n.index);
          } else if constexpr (std::is_same_v<T, CmdletCall>) {
            if (auto name = detail::command_name(n, env)) out.evidence.cmdlets.insert(*name);
            sub(n.name);
            subs(n.args);
          } else if constexpr (std::is_same_v<T, Paren>) {
            sub(n.inner);
          } else if constexpr (std::is_same_v<T, ArrayLit>) {
            subs(n.items);
          } else if constexpr (std::is_same_v<T, UnaryOp>) {
            sub(n.operand);
          } else if constexpr (std::is_same_v<T, BinaryOp>) {
            sub(n.left);
            sub(n.right);
          }
        },
        e.node);
  }

  Expr with_tokens(Expr e, const Expr& from) {
    e.tokens = from.tokens;
    return e;
  }

  // Constant-substituted copy of `e`.
  Expr simplify(const Expr& e, const Environment& env, FoldStats* stats = nullptr) {
    if (auto* s = e.as<StringLit>()) {
      if (!s->bare) add_pool(s->text);
      return e;
    }
    if (e.is<Number>() || e.is<UnknownExpr>()) return e;
    if (auto* v = e.as<VarRef>()) {
      Value val = env.read(v->name);
      if (val.kind == ValueKind::Text || val.kind == ValueKind::Number) {
        add_pool(val);
        return with_tokens(detail::literal_of(val), e);
      }
      return e;
    }
    Value val = fold_expr(e, env, stats);
    if (val.known()) {
      add_pool(val);
      return with_tokens(detail::literal_of(val), e);
    }
    Expr copy = e;
    auto simp = [&](Box<Expr>& b) {
      if (b) b = simplify(*b, env);
    };
    auto simps = [&](std::vector<Expr>& xs) {
      for (auto& x : xs) x = simplify(x, env);
    };
    std::visit(
        [&](auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Concat>) {
            simp(n.left);
            simp(n.right);
          } else if constexpr (std::is_same_v<T, FormatOp>) {
            simp(n.format);
            simps(n.args);
          } else if constexpr (std::is_same_v<T, CharCast>) {
            simp(n.code);
          } else if constexpr (std::is_same_v<T, TypeCast>) {
            simp(n.inner);
          } else if constexpr (std::is_same_v<T, MethodCall>) {
            simp(n.receiver);
            simps(n.args);
          } else if constexpr (std::is_same_v<T, StaticCall>) {
            simp(n.type);
            simps(n.args);
          } else if constexpr (std::is_same_v<T, MemberGet>) {
            simp(n.receiver);
          } else if constexpr (std::is_same_v<T, Index>) {
            simp(n.target);
            simp(n.index);
          } else if constexpr (std::is_same_v<T, CmdletCall>) {
            if (!n.invoke_op.empty() && n.name) {
              Value name = fold_expr(*n.name, env);
              if (name.kind == ValueKind::Text && is_command_word(name.text)) {
                Expr bare;
                bare.node = StringLit{name.text, true};
                bare.tokens = n.name->tokens;
                n.name = std::move(bare);
                n.invoke_op.clear();
              } else {
                simp(n.name);
              }
            }
            simps(n.args);
          } else if constexpr (std::is_same_v<T, Paren>) {
            simp(n.inner);
          } else if constexpr (std::is_same_v<T, ArrayLit>) {
            simps(n.items);
          } else if constexpr (std::is_same_v<T, UnaryOp>) {
            simp(n.operand);
          } else if constexpr (std::is_same_v<T, BinaryOp>) {
            simp(n.left);
            simp(n.right);
          }
        },
        copy.node);
    if (copy.is<Concat>()) return merge_concat(std::move(copy));
    return copy;
  }

  static void flatten_left(Expr& e, std::vector<Expr>& ops) {
    if (auto* c = e.as<Concat>(); c && c->left && c->right) {
      flatten_left(*c->left, ops);
      ops.push_back(std::move(*c->right));
      return;
    }
    ops.push_back(std::move(e));
  }

  static bool is_literal_operand(const Expr& e) {
    if (auto* s = e.as<StringLit>()) return !s->bare;
    if (auto* n = e.as<Number>()) return n->value.has_value();
    return false;
  }

  // In a string-typed chain ("lit" + ... or $HOME + ...), adjacent constant
  // operands can be merged without changing the result.
  Expr merge_concat(Expr e) {
    const TokenRange range = e.tokens;
    std::vector<Expr> ops;
    flatten_left(e, ops);
    bool string_chain = false;
    if (auto* s = ops[0].as<StringLit>()) string_chain = !s->bare;
    if (auto* v = ops[0].as<VarRef>()) string_chain = detail::is_string_automatic(v->name);
    std::vector<Expr> merged;
    if (string_chain) {
      for (std::size_t i = 0; i < ops.size();) {
        bool can_merge = is_literal_operand(ops[i]) && (i > 0 || ops[0].is<StringLit>());
        std::size_t j = i;
        std::string text;
        if (can_merge) {
          while (j < ops.size() && is_literal_operand(ops[j])) {
            if (auto* s = ops[j].as<StringLit>()) text += s->text;
            else text += std::to_string(*ops[j].as<Number>()->value);
            ++j;
          }
        }
        if (can_merge && j - i >= 2) {
          Expr lit;
          lit.node = StringLit{text};
          lit.tokens = {ops[i].tokens.begin, ops[j - 1].tokens.end};
          add_pool(text);
          merged.push_back(std::move(lit));
          i = j;
        } else {
          merged.push_back(std::move(ops[i]));
          ++i;
        }
      }
    } else {
      merged = std::move(ops);
    }
    Expr acc = std::move(merged[0]);
    for (std::size_t i = 1; i < merged.size(); ++i) {
      Expr next;
      next.tokens = {acc.tokens.begin, merged[i].tokens.end};
      next.node = Concat{std::move(acc), std::move(merged[i])};
      acc = std::move(next);
    }
    acc.tokens = range;
    return acc;
  }

  Block run_scoped(const Block& body, Environment& env, const std::set<std::string>& assigned,
                   Environment& scope_out) {
    scope_out = env;
    for (const auto& name : assigned) scope_out.bind(name, Value::unknown());
    return run_block(body, scope_out);
  }

  Stmt assign_stmt(const Stmt& orig, std::string name, std::string display, const Expr& value,
                   Environment& env) {
    record_evidence(value, env);
    FoldStats stats;
    Expr rhs = simplify(value, env, &stats);
    out.evidence.transforms += stats.transforms;
    Value v = fold_expr(rhs, env);
    if (name != "null" && name != "true" && name != "false") env.bind(name, v);
    Stmt s;
    s.tokens = orig.tokens;
    s.node = Assign{std::move(name), std::move(display), std::move(rhs)};
    return s;
  }

  Stmt run_stmt(const Stmt& s, Environment& env) {
    Stmt out_stmt;
    out_stmt.tokens = s.tokens;
    if (auto* a = s.as<Assign>()) return assign_stmt(s, a->name, a->display, a->value, env);
    if (auto* si = s.as<SetItem>()) {
      if (auto name = set_item_variable(*si, env)) {
        record_evidence(si->path, env);
        out.evidence.transforms += 1;
        return assign_stmt(s, canonical_var_name(*name), *name, si->value, env);
      }
      record_evidence(si->path, env);
      record_evidence(si->value, env);
      out.evidence.cmdlets.insert("set-item");
      out_stmt.node = SetItem{simplify(si->path, env), simplify(si->value, env)};
      return out_stmt;
    }
    if (auto* m = s.as<MemberAssign>()) {
      record_evidence(m->target, env);
      record_evidence(m->value, env);
      FoldStats stats;
      Expr value = simplify(m->value, env, &stats);
      out.evidence.transforms += stats.transforms;
      out_stmt.node = MemberAssign{m->target, std::move(value)};
      return out_stmt;
    }
    if (auto* x = s.as<ExprStmt>()) {
      record_evidence(x->expr, env);
      FoldStats stats;
      Expr e = simplify(x->expr, env, &stats);
      out.evidence.transforms += stats.transforms;
      out_stmt.node = ExprStmt{std::move(e)};
      return out_stmt;
    }
    if (auto* f = s.as<ForEach>()) {
      record_evidence(f->iterable, env);
      FoldStats stats;
      Expr iterable = simplify(f->iterable, env, &stats);
      out.evidence.transforms += stats.transforms;
      std::set<std::string> assigned{f->var};
      collect_assigned(f->body, env, assigned);
      Environment inner;
      Block body = run_scoped(f->body, env, assigned, inner);
      env.leave_scope(inner, assigned);
      out_stmt.node = ForEach{f->var, f->var_display, std::move(iterable), std::move(body)};
      return out_stmt;
    }
    if (auto* i = s.as<If>()) {
      record_evidence(i->cond, env);
      FoldStats stats;
      If node;
      node.cond = simplify(i->cond, env, &stats);
      out.evidence.transforms += stats.transforms;
      std::set<std::string> assigned;
      collect_assigned(i->body, env, assigned);
      collect_assigned(i->else_body, env, assigned);
      Environment then_env, else_env;
      node.body = run_scoped(i->body, env, assigned, then_env);
      node.else_body = run_scoped(i->else_body, env, assigned, else_env);
      node.has_else = i->has_else;
      env.leave_scope(then_env, assigned);
      env.leave_scope(else_env, assigned);
      out_stmt.node = std::move(node);
      return out_stmt;
    }
    if (auto* t = s.as<TryCatch>()) {
      TryCatch node = *t;
      std::set<std::string> assigned;
      collect_assigned(t->try_body, env, assigned);
      collect_assigned(t->catch_body, env, assigned);
      collect_assigned(t->finally_body, env, assigned);
      Environment a, b, c;
      node.try_body = run_scoped(t->try_body, env, assigned, a);
      node.catch_body = run_scoped(t->catch_body, env, assigned, b);
      node.finally_body = run_scoped(t->finally_body, env, assigned, c);
      env.leave_scope(a, assigned);
      env.leave_scope(b, assigned);
      env.leave_scope(c, assigned);
      out_stmt.node = std::move(node);
      return out_stmt;
    }
    if (auto* u = s.as<UnknownStmt>()) {
      for (const auto& name : assigned_in_raw(u->raw)) env.bind(name, Value::unknown());
      return s;
    }
    return s;  // Break
  }
};

// --- dead code ---------------------------------------------------------------

struct Read {
  std::size_t pos;
  std::vector<std::size_t> loops;
};

class DeadCode {
 public:
  explicit DeadCode(const Environment& env) : env_(env) {}

  Block run(Block block) {
    for (;;) {
      reads_.clear();
      counter_ = 0;
      collect(block, {});
      counter_ = 0;
      changed_ = false;
      block = prune(std::move(block), {});
      if (!changed_) return block;
    }
  }

 private:
  const Environment& env_;
  std::map<std::string, std::vector<Read>, std::less<>> reads_;
  std::size_t counter_ = 0;
  bool changed_ = false;

  void read(const std::string& name, std::size_t pos, const std::vector<std::size_t>& loops) {
    reads_[name].push_back({pos, loops});
  }

  void reads_in(const Expr& e, std::set<std::string>& out) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          auto sub = [&](const Box<Expr>& b) {
            if (b) reads_in(*b, out);
          };
          auto subs = [&](const std::vector<Expr>& xs) {
            for (const auto& x : xs) reads_in(x, out);
          };
          if constexpr (std::is_same_v<T, VarRef>) {
            out.insert(n.name);
          } else if constexpr (std::is_same_v<T, StringLit>) {
            if (ascii_lower(n.text).rfind("variable:", 0) == 0)
              out.insert(canonical_var_name(n.text.substr(9)));
          } else if constexpr (std::is_same_v<T, UnknownExpr>) {
            reads_in_raw(n.raw, out);
          } else if constexpr (std::is_same_v<T, Concat>) {
            sub(n.left);
            sub(n.right);
          } else if constexpr (std::is_same_v<T, FormatOp>) {
            sub(n.format);
            subs(n.args);
          } else if constexpr (std::is_same_v<T, CharCast>) {
            sub(n.code);
          } else if constexpr (std::is_same_v<T, TypeCast>) {
            sub(n.inner);
          } else if constexpr (std::is_same_v<T, MethodCall>) {
            sub(n.receiver);
            subs(n.args);
          } else if constexpr (std::is_same_v<T, StaticCall>) {
            sub(n.type);
            subs(n.args);
          } else if constexpr (std::is_same_v<T, MemberGet>) {
            sub(n.receiver);
          } else if constexpr (std::is_same_v<T, Index>) {
            sub(n.target);
            sub(n.index);
          } else if constexpr (std::is_same_v<T, CmdletCall>) {
            auto name = detail::command_name(n, env_);
            bool variable_cmd = !name || name->find("variable") != std::string::npos ||
                                *name == "gv" || *name == "sv" || *name == "nv" || *name == "rv" ||
                                *name == "clv";
            if (variable_cmd) {
              for (const auto& a : n.args) {
                Value v = fold_expr(a, env_);
                if (v.kind == ValueKind::Text) out.insert(canonical_var_name(v.text));
              }
            }
            sub(n.name);
            subs(n.args);
          } else if constexpr (std::is_same_v<T, Paren>) {
            sub(n.inner);
          } else if constexpr (std::is_same_v<T, ArrayLit>) {
            subs(n.items);
          } else if constexpr (std::is_same_v<T, UnaryOp>) {
            sub(n.operand);
          } else if constexpr (std::is_same_v<T, BinaryOp>) {
            sub(n.left);
            sub(n.right);
          }
        },
        e.node);
  }

  void collect(const Block& block, const std::vector<std::size_t>& loops) {
    for (const auto& s : block) {
      const std::size_t pos = counter_++;
      std::set<std::string> names;
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Assign>) {
              reads_in(n.value, names);
            } else if constexpr (std::is_same_v<T, MemberAssign>) {
              reads_in(n.target, names);
              reads_in(n.value, names);
            } else if constexpr (std::is_same_v<T, ExprStmt>) {
              reads_in(n.expr, names);
            } else if constexpr (std::is_same_v<T, SetItem>) {
              reads_in(n.path, names);
              reads_in(n.value, names);
            } else if constexpr (std::is_same_v<T, UnknownStmt>) {
              reads_in_raw(n.raw, names);
            } else if constexpr (std::is_same_v<T, ForEach>) {
              reads_in(n.iterable, names);
            } else if constexpr (std::is_same_v<T, If>) {
              reads_in(n.cond, names);
            }
          },
          s.node);
      for (const auto& name : names) read(name, pos, loops);
      if (auto* f = s.as<ForEach>()) {
        auto inner = loops;
        inner.push_back(pos);
        collect(f->body, inner);
      } else if (auto* i = s.as<If>()) {
        collect(i->body, loops);
        collect(i->else_body, loops);
      } else if (auto* t = s.as<TryCatch>()) {
        collect(t->try_body, loops);
        collect(t->catch_body, loops);
        collect(t->finally_body, loops);
      }
    }
  }

  bool read_later(const std::string& name, std::size_t pos, const std::vector<std::size_t>& loops) const {
    auto it = reads_.find(name);
    if (it == reads_.end()) return false;
    for (const auto& r : it->second) {
      if (r.pos > pos) return true;
      for (auto l : r.loops)
        if (std::find(loops.begin(), loops.end(), l) != loops.end()) return true;
    }
    return false;
  }

  bool dead_assignment(const Stmt& s, std::size_t pos, const std::vector<std::size_t>& loops) const {
    std::string name;
    const Expr* value = nullptr;
    if (auto* a = s.as<Assign>()) {
      name = a->name;
      value = &a->value;
    } else if (auto* si = s.as<SetItem>()) {
      auto n = set_item_variable(*si, env_);
      if (!n || !detail::is_pure(si->path)) return false;
      name = canonical_var_name(*n);
      value = &si->value;
    } else {
      return false;
    }
    if (is_protected_name(name)) return false;
    if (!detail::is_pure(*value)) return false;
    return !read_later(name, pos, loops);
  }

  std::size_t count_statements(const Block& block) const {
    std::size_t n = 0;
    for (const auto& s : block) {
      ++n;
      if (auto* f = s.as<ForEach>()) n += count_statements(f->body);
      else if (auto* i = s.as<If>()) n += count_statements(i->body) + count_statements(i->else_body);
      else if (auto* t = s.as<TryCatch>())
        n += count_statements(t->try_body) + count_statements(t->catch_body) +
             count_statements(t->finally_body);
    }
    return n;
  }

  Block prune(Block block, const std::vector<std::size_t>& loops) {
    Block out;
    bool after_break = false;
    for (auto& s : block) {
      const std::size_t pos = counter_++;
      if (after_break) {
        skip_nested(s);
        changed_ = true;
        continue;
      }
      if (dead_assignment(s, pos, loops)) {
        changed_ = true;
        continue;
      }
      if (auto* f = s.as<ForEach>()) {
        auto inner = loops;
        inner.push_back(pos);
        const bool before = changed_;
        const std::size_t start = counter_;
        Block body = prune(f->body, inner);
        if (body.empty()) {
          if (detail::is_pure(f->iterable)) {
            changed_ = true;
            continue;  // the loop no longer does anything
          }
          // keep the body rather than emit an empty loop
          changed_ = before;
          counter_ = start + count_statements(f->body);
        } else {
          f->body = std::move(body);
        }
      } else if (auto* i = s.as<If>()) {
        i->body = prune(std::move(i->body), loops);
        i->else_body = prune(std::move(i->else_body), loops);
      } else if (auto* t = s.as<TryCatch>()) {
        t->try_body = prune(std::move(t->try_body), loops);
        t->catch_body = prune(std::move(t->catch_body), loops);
        t->finally_body = prune(std::move(t->finally_body), loops);
      }
      if (s.is<Break>()) after_break = true;
      out.push_back(std::move(s));
    }
    return out;
  }

  void skip_nested(const Stmt& s) {
    if (auto* f = s.as<ForEach>()) counter_ += count_statements(f->body);
    else if (auto* i = s.as<If>()) counter_ += count_statements(i->body) + count_statements(i->else_body);
    else if (auto* t = s.as<TryCatch>())
      counter_ += count_statements(t->try_body) + count_statements(t->catch_body) +
                  count_statements(t->finally_body);
  }
};

}  // namespace

ScriptAst eliminate_dead_code(const ScriptAst& ast, const Environment& env) {
  ScriptAst out;
  out.source = ast.source;
  out.statements = DeadCode(env).run(ast.statements);
  return out;
}

DeobResult run_script(const ScriptAst& ast, const RenderOptions& render) {
  DeobResult result;
  Runner runner(result);
  Environment env;
  Block residual = runner.run_block(ast.statements, env);
  result.evidence.statements = ast.statements.size();
  ScriptAst res;
  res.statements = std::move(residual);
  result.residual = eliminate_dead_code(res, env);
  result.folded_env = std::move(env);
  result.rendered = render_block(result.residual.statements, render);
  result.residual.source = result.rendered;
  return result;
}

DeobResult deobfuscate_source(std::string_view text, const RenderOptions& render) {
  return run_script(parse_source(text), render);
}

}  // namespace psdeob

// SPDX-License-Identifier: Apache-2.0
//
// Statement/expression tree for the obfuscation subset of PowerShell.
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace psdeob {

/// Owning, deep-copying pointer so recursive nodes keep value semantics.
template <class T>
class Box {
 public:
  Box() = default;
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  explicit operator bool() const { return static_cast<bool>(ptr_); }
  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::unique_ptr<T> ptr_;
};

/// Half-open range of token indices.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

struct Expr;

struct StringLit {
  std::string text;
  bool bare = false;  // command-mode word, rendered unquoted
  friend bool operator==(const StringLit&, const StringLit&) = default;
};
struct Number {
  std::string raw;
  std::optional<std::int64_t> value;  // absent for non-integers
  friend bool operator==(const Number&, const Number&) = default;
};
struct VarRef {
  std::string name;     // canonical: lowercase, scope prefix removed
  std::string display;  // as written
  friend bool operator==(const VarRef&, const VarRef&) = default;
};
struct Concat {
  Box<Expr> left;
  Box<Expr> right;
  friend bool operator==(const Concat&, const Concat&) = default;
};
struct FormatOp {
  Box<Expr> format;
  std::vector<Expr> args;
  friend bool operator==(const FormatOp&, const FormatOp&) = default;
};
struct CharCast {
  Box<Expr> code;
  friend bool operator==(const CharCast&, const CharCast&) = default;
};
/// `[type]operand`, or a bare type literal when `inner` is empty.
struct TypeCast {
  std::string type_name;  // lowercase
  Box<Expr> inner;
  friend bool operator==(const TypeCast&, const TypeCast&) = default;
};
struct MethodCall {
  Box<Expr> receiver;
  std::string method;  // normalized
  std::vector<Expr> args;
  friend bool operator==(const MethodCall&, const MethodCall&) = default;
};
struct StaticCall {
  Box<Expr> type;
  std::string member;  // normalized
  std::vector<Expr> args;
  friend bool operator==(const StaticCall&, const StaticCall&) = default;
};
/// Property read: `.name` or `::name` without an argument list.
struct MemberGet {
  Box<Expr> receiver;
  std::string member;  // normalized
  bool is_static = false;
  friend bool operator==(const MemberGet&, const MemberGet&) = default;
};
struct Index {
  Box<Expr> target;
  Box<Expr> index;
  friend bool operator==(const Index&, const Index&) = default;
};
/// Command invocation. `name` is a bare StringLit for plain commands or any
/// expression for `&(...)` / `.(...)` computed names.
struct CmdletCall {
  Box<Expr> name;
  std::vector<Expr> args;
  std::string invoke_op;  // "", "&" or "."
  friend bool operator==(const CmdletCall&, const CmdletCall&) = default;
};
struct Paren {
  Box<Expr> inner;
  friend bool operator==(const Paren&, const Paren&) = default;
};
struct ArrayLit {
  std::vector<Expr> items;
  friend bool operator==(const ArrayLit&, const ArrayLit&) = default;
};
struct UnaryOp {
  std::string op;  // lowercase: "-", "!", "-not", "-join", ...
  Box<Expr> operand;
  friend bool operator==(const UnaryOp&, const UnaryOp&) = default;
};
struct BinaryOp {
  std::string op;  // lowercase: "-ge", "-join", "-", "*", ...
  Box<Expr> left;
  Box<Expr> right;
  friend bool operator==(const BinaryOp&, const BinaryOp&) = default;
};
/// Construct outside the subset; keeps its source text for rendering.
struct UnknownExpr {
  std::string raw;
  friend bool operator==(const UnknownExpr&, const UnknownExpr&) = default;
};

struct Expr {
  using Node = std::variant<StringLit, Number, VarRef, Concat, FormatOp, CharCast, TypeCast,
                            MethodCall, StaticCall, MemberGet, Index, CmdletCall, Paren,
                            ArrayLit, UnaryOp, BinaryOp, UnknownExpr>;
  Node node;
  TokenRange tokens;

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  template <class T>
  T* as() {
    return std::get_if<T>(&node);
  }

  friend bool operator==(const Expr& a, const Expr& b) { return a.node == b.node; }
};

struct Stmt;
using Block = std::vector<Stmt>;

struct Assign {
  std::string name;     // canonical
  std::string display;  // as written
  Expr value;
  friend bool operator==(const Assign&, const Assign&) = default;
};
/// `$x::Prop = value` and `$x.Prop = value`.
struct MemberAssign {
  Expr target;
  Expr value;
  friend bool operator==(const MemberAssign&, const MemberAssign&) = default;
};
struct ExprStmt {
  Expr expr;
  friend bool operator==(const ExprStmt&, const ExprStmt&) = default;
};
struct ForEach {
  std::string var;
  std::string var_display;
  Expr iterable;
  Block body;
  friend bool operator==(const ForEach&, const ForEach&) = default;
};
struct If {
  Expr cond;
  Block body;
  Block else_body;  // `elseif` chains nest here as a single If
  bool has_else = false;
  friend bool operator==(const If&, const If&) = default;
};
struct TryCatch {
  Block try_body;
  Block catch_body;
  bool has_catch = false;
  std::string catch_type;  // empty for a bare catch
  Block finally_body;
  bool has_finally = false;
  friend bool operator==(const TryCatch&, const TryCatch&) = default;
};
struct Break {
  std::string keyword = "break";  // or "continue"
  friend bool operator==(const Break&, const Break&) = default;
};
/// `Set-Item <path> <value>`; a `variable:NAME` path acts as an assignment.
struct SetItem {
  Expr path;
  Expr value;
  friend bool operator==(const SetItem&, const SetItem&) = default;
};
struct UnknownStmt {
  std::string raw;
  friend bool operator==(const UnknownStmt&, const UnknownStmt&) = default;
};

struct Stmt {
  using Node = std::variant<Assign, MemberAssign, ExprStmt, ForEach, If, TryCatch, Break,
                            SetItem, UnknownStmt>;
  Node node;
  TokenRange tokens;

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  template <class T>
  T* as() {
    return std::get_if<T>(&node);
  }

  friend bool operator==(const Stmt& a, const Stmt& b) { return a.node == b.node; }
};

struct ScriptAst {
  Block statements;
  std::string source;  // text the tokens were produced from
  friend bool operator==(const ScriptAst& a, const ScriptAst& b) {
    return a.statements == b.statements;
  }
};

/// Canonical variable key: lowercase, backticks and scope prefixes removed.
std::string canonical_var_name(std::string_view raw);

/// Counts Unknown statements at every nesting level.
std::size_t count_unknown_statements(const Block& block);

}  // namespace psdeob

// SPDX-License-Identifier: Apache-2.0
//
// Constant folding over the parsed subset, dead-code elimination and the
// normalized rendering of what is left.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "psdeob/ast.hpp"

namespace psdeob {

enum class ValueKind { Unknown, Text, Number, TextList, TypeName };

std::string_view to_string(ValueKind k);

struct Value {
  ValueKind kind = ValueKind::Unknown;
  std::string text;                 // Text, TypeName (lowercase)
  std::int64_t number = 0;          // Number
  std::vector<std::string> items;   // TextList

  static Value unknown() { return {}; }
  static Value of_text(std::string s);
  static Value of_number(std::int64_t n);
  static Value of_list(std::vector<std::string> items);
  static Value of_type(std::string_view name);

  bool known() const { return kind != ValueKind::Unknown; }
  bool is_text() const { return kind == ValueKind::Text; }

  friend bool operator==(const Value&, const Value&) = default;
};

/// Variable bindings keyed by canonical (lowercase) name.
class Environment {
 public:
  /// Bound value, or nullptr.
  const Value* find(std::string_view name) const;
  /// Unbound names read as empty text and bump the counter.
  Value read(std::string_view name) const;
  void bind(std::string_view name, Value v);
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  /// Closes a nested scope: names assigned inside may or may not have run,
  /// so they become Unknown here.
  void leave_scope(const Environment& inner, const std::set<std::string>& assigned);

  std::size_t read_of_unbound() const { return unbound_reads_; }
  const std::map<std::string, Value, std::less<>>& bindings() const { return bindings_; }
  /// Names in order of first binding.
  const std::vector<std::string>& order() const { return order_; }

 private:
  std::map<std::string, Value, std::less<>> bindings_;
  std::vector<std::string> order_;
  mutable std::size_t unbound_reads_ = 0;
};

/// Names of variables PowerShell provides itself ($HOME, $env:*, ...). They
/// have no static value.
bool is_automatic_variable(std::string_view canonical_name);

// Folding primitives. They throw the EvalError family; fold_expr turns those
// into Unknown.
std::string eval_format(std::string_view format, const std::vector<std::string>& args);
std::string eval_replace(std::string_view subject, std::string_view needle,
                         std::string_view replacement);
std::vector<std::string> eval_split(std::string_view subject, std::string_view separator);
std::string eval_charcast(std::int64_t code);

/// Per-fold bookkeeping; transforms counts successfully folded obfuscation
/// constructs (concatenation, -f, casts, string methods, ...).
struct FoldStats {
  std::size_t transforms = 0;
};

/// Never throws; anything it cannot decide is Unknown. Does not modify the
/// bindings (only the unbound-read counter).
Value fold_expr(const Expr& expr, const Environment& env, FoldStats* stats = nullptr);

/// Facts about the script used by the CTI heuristic.
struct Evidence {
  std::size_t statements = 0;    // top-level statements in the input
  std::size_t transforms = 0;    // folded obfuscation constructs
  std::set<std::string> methods; // invoked member names, normalized
  std::set<std::string> cmdlets; // invoked command names, folded and lowercased
};

struct DeobResult {
  Environment folded_env;
  ScriptAst residual;
  std::string rendered;
  std::vector<std::string> string_pool;  // folded texts, first-seen order, unique
  Evidence evidence;
};

struct RenderOptions {
  /// Drop a trailing '\' or '/' from folded string literals.
  bool trim_trailing_separators = false;
};

DeobResult run_script(const ScriptAst& ast, const RenderOptions& render = {});

/// Drops unread assignments with effect-free right-hand sides, and statements
/// following break/continue in the same block. Reads are taken from `ast`
/// itself; `env` resolves computed Set-Item paths.
ScriptAst eliminate_dead_code(const ScriptAst& ast, const Environment& env);

std::string render_deobfuscated(const DeobResult& result, const RenderOptions& options = {});
std::string render_block(const Block& block, const RenderOptions& options = {});
std::string render_expr(const Expr& expr, const RenderOptions& options = {});

/// Quotes text as a PowerShell string literal that lexes back to `text`.
std::string quote_ps_string(std::string_view text);

/// Convenience: strip comments, tokenize, parse, run.
DeobResult deobfuscate_source(std::string_view text, const RenderOptions& render = {});

}  // namespace psdeob

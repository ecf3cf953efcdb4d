// SPDX-License-Identifier: Apache-2.0
// Helpers shared by the evaluator, dead-code elimination and rendering.
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "psdeob/partial_eval.hpp"

namespace psdeob::detail {

std::string ascii_lower(std::string_view s);

/// Text form of a value where PowerShell would stringify it; nullopt for
/// Unknown and type names.
std::optional<std::string> to_text(const Value& v);

/// `Get-Variable NAME` / `gv NAME` (optionally -ValueOnly), possibly wrapped
/// in parentheses.
struct GetVariableCall {
  std::string name;  // canonical
  bool value_only = false;
};
std::optional<GetVariableCall> as_get_variable(const Expr& e, const Environment& env);

/// Folded command name of a CmdletCall, lowercased.
std::optional<std::string> command_name(const CmdletCall& call, const Environment& env);

/// Automatic variables known to hold strings ($HOME, $env:...).
bool is_string_automatic(std::string_view canonical_name);

/// No observable effects when evaluated (reads are allowed).
bool is_pure(const Expr& e);

/// Literal expression for a known value.
Expr literal_of(const Value& v);

/// UTF-16 code units in UTF-8 text, i.e. PowerShell's .Length.
std::size_t utf16_length(std::string_view utf8);

bool is_ascii(std::string_view s);

}  // namespace psdeob::detail

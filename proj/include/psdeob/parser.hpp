// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>

#include "psdeob/ast.hpp"
#include "psdeob/lexer.hpp"

namespace psdeob {

/// Parses a whole script. Statements that fall outside the subset become
/// UnknownStmt covering their tokens; this never throws.
///
/// `source` is the text the tokens came from. It is used for the raw slices
/// of unknown statements and may be empty, in which case token texts are
/// joined instead.
ScriptAst parse_script(std::span<const Token> tokens, std::string_view source = {});

/// Parses exactly one expression; throws ParseError otherwise.
Expr parse_expression(std::span<const Token> tokens, std::string_view source = {});

/// strip comments -> tokenize -> parse. A lexing failure yields a
/// single unknown statement covering the whole text.
ScriptAst parse_source(std::string_view text);

}  // namespace psdeob

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "psdeob/error.hpp"
#include "psdeob/parser.hpp"
#include "test_support.hpp"

using namespace psdeob;
using psdeob::testing::read_data;

namespace {

Expr expr_of(std::string_view src) { return parse_expression(tokenize(src), src); }

const StringLit* lit(const Expr& e) { return e.as<StringLit>(); }

}  // namespace

TEST(ParseScript, SimpleAssign) {
  auto ast = parse_source("$a=('x'+'y')");
  ASSERT_EQ(ast.statements.size(), 1u);
  const auto* a = ast.statements[0].as<Assign>();
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->name, "a");
  const Expr* v = &a->value;
  if (const auto* p = v->as<Paren>()) v = &*p->inner;
  const auto* c = v->as<Concat>();
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(lit(*c->left)->text, "x");
  EXPECT_EQ(lit(*c->right)->text, "y");
}

TEST(ParseScript, GoldenFirstStatementIsTypeCastOfFormat) {
  auto ast = parse_source(read_data("fig2a.ps1"));
  ASSERT_FALSE(ast.statements.empty());
  const auto* a = ast.statements[0].as<Assign>();
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->name, "jcfvpb");
  const auto* cast = a->value.as<TypeCast>();
  ASSERT_NE(cast, nullptr);
  EXPECT_EQ(cast->type_name, "type");
  ASSERT_TRUE(cast->inner);
  const Expr* inner = &*cast->inner;
  if (const auto* p = inner->as<Paren>()) inner = &*p->inner;
  const auto* fmt = inner->as<FormatOp>();
  ASSERT_NE(fmt, nullptr);
  EXPECT_EQ(lit(*fmt->format)->text, "{2}{3}{1}{5}{4}{0}");
  EXPECT_EQ(fmt->args.size(), 6u);
}

TEST(ParseScript, GoldenSetItemAndLoop) {
  auto ast = parse_source(read_data("fig2a.ps1"));
  ASSERT_GT(ast.statements.size(), 1u);
  EXPECT_TRUE(ast.statements[1].is<SetItem>());
  bool saw_loop = false;
  for (const auto& s : ast.statements) {
    if (const auto* f = s.as<ForEach>()) {
      saw_loop = true;
      EXPECT_EQ(f->var, "odi78ep");
      EXPECT_FALSE(f->body.empty());
    }
  }
  EXPECT_TRUE(saw_loop);
}

TEST(ParseScript, GoldenHasNoUnknownStatements) {
  auto ast = parse_source(read_data("fig2a.ps1"));
  EXPECT_EQ(count_unknown_statements(ast.statements), 0u);
}

TEST(ParseScript, GarbageDegradesToUnknown) {
  auto ast = parse_source("@@@@");
  ASSERT_EQ(ast.statements.size(), 1u);
  const auto* u = ast.statements[0].as<UnknownStmt>();
  ASSERT_NE(u, nullptr);
  EXPECT_EQ(u->raw, "@@@@");
}

TEST(ParseScript, BadStatementDoesNotAbortOthers) {
  auto ast = parse_source("$a='x'; @@ ; $b='y'");
  ASSERT_EQ(ast.statements.size(), 3u);
  EXPECT_TRUE(ast.statements[0].is<Assign>());
  EXPECT_TRUE(ast.statements[1].is<UnknownStmt>());
  EXPECT_TRUE(ast.statements[2].is<Assign>());
}

// Typed and unknown statements together cover every token exactly once.
TEST(ParseScript, SpansPartitionTokens) {
  for (std::string src : {read_data("fig2a.ps1"), std::string("$a='x'; @@ ; $b='y'\n$c=1")}) {
    auto text = strip_comments(src);
    auto toks = tokenize(text);
    auto ast = parse_script(toks, text);
    std::vector<int> covered(toks.size(), 0);
    for (const auto& s : ast.statements)
      for (std::size_t i = s.tokens.begin; i < s.tokens.end; ++i) ++covered[i];
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (toks[i].kind == TokenKind::Semicolon) {
        EXPECT_LE(covered[i], 1) << i;
        continue;
      }
      EXPECT_EQ(covered[i], 1) << "token " << i << " '" << toks[i].text << "'";
    }
  }
}

TEST(ParseScript, Deterministic) {
  auto text = read_data("fig2a.ps1");
  EXPECT_EQ(parse_source(text), parse_source(text));
}

TEST(ParseExpression, ConcatIsLeftAssociative) {
  auto e = expr_of("'a'+'b'+'c'");
  const auto* outer = e.as<Concat>();
  ASSERT_NE(outer, nullptr);
  EXPECT_EQ(lit(*outer->right)->text, "c");
  const auto* inner = outer->left->as<Concat>();
  ASSERT_NE(inner, nullptr);
  EXPECT_EQ(lit(*inner->left)->text, "a");
  EXPECT_EQ(lit(*inner->right)->text, "b");
}

TEST(ParseExpression, CharCast) {
  auto e = expr_of("[char](64)");
  const auto* c = e.as<CharCast>();
  ASSERT_NE(c, nullptr);
  const Expr* code = &*c->code;
  if (const auto* p = code->as<Paren>()) code = &*p->inner;
  ASSERT_NE(code->as<Number>(), nullptr);
  EXPECT_EQ(code->as<Number>()->value, 64);
}

TEST(ParseExpression, FormatOp) {
  auto e = expr_of("(\"{0}\" -F 'q')");
  const auto* p = e.as<Paren>();
  ASSERT_NE(p, nullptr);
  const auto* f = p->inner->as<FormatOp>();
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(lit(*f->format)->text, "{0}");
  ASSERT_EQ(f->args.size(), 1u);
  EXPECT_EQ(lit(f->args[0])->text, "q");
}

TEST(ParseExpression, MemberBindsTighterThanPlusThanFormat) {
  auto e = expr_of("'{0}{1}' -f 'a'+'b'.replace('b','c'),'d'");
  const auto* f = e.as<FormatOp>();
  ASSERT_NE(f, nullptr);
  ASSERT_EQ(f->args.size(), 2u);
  const auto* c = f->args[0].as<Concat>();
  ASSERT_NE(c, nullptr);
  EXPECT_NE(c->right->as<MethodCall>(), nullptr);
}

TEST(ParseExpression, MethodNameIsNormalized) {
  auto e = expr_of("$x.\"re`PlacE\"('a','b')");
  const auto* m = e.as<MethodCall>();
  ASSERT_NE(m, nullptr);
  EXPECT_EQ(m->method, "replace");
}

TEST(ParseExpression, ComputedCommandName) {
  auto ast = parse_source(".('new-'+'ob'+'jec'+'t') net.webclient");
  ASSERT_EQ(ast.statements.size(), 1u);
  const auto* s = ast.statements[0].as<ExprStmt>();
  ASSERT_NE(s, nullptr);
  const auto* cmd = s->expr.as<CmdletCall>();
  ASSERT_NE(cmd, nullptr);
  EXPECT_EQ(cmd->invoke_op, ".");
  EXPECT_EQ(cmd->args.size(), 1u);
}

TEST(ParseExpression, RejectsTrailingTokens) {
  EXPECT_THROW(expr_of("'a' 'b'"), ParseError);
  EXPECT_THROW(expr_of("('a'"), ParseError);
}

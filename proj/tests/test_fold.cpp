// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <json.hpp>
#include <random>
#include <sstream>

#include "psdeob/error.hpp"
#include "psdeob/parser.hpp"
#include "psdeob/partial_eval.hpp"
#include "test_support.hpp"

using namespace psdeob;
using psdeob::testing::read_data;

namespace {

Value fold(std::string_view src, const Environment& env = {}) {
  return fold_expr(parse_expression(tokenize(src), src), env);
}

}  // namespace

TEST(EvalFormat, PermutedTypeNames) {
  EXPECT_EQ(eval_format("{2}{3}{1}{5}{4}{0}", {"Y", ".D", "sYS", "tEm.Io", "or", "IRECT"}), "sYStEm.Io.DIRECTorY");
  EXPECT_EQ(eval_format("{2}{4}{1}{0}{6}{5}{8}{3}{7}",
                        {"t.Ser", "TeM.nE", "S", "aN", "Ys", "In", "vicepo", "aGeR", "Tm"}),
            "SYsTeM.nEt.ServicepoInTmaNaGeR");
  EXPECT_EQ(eval_format("{0}", {"x"}), "x");
  EXPECT_EQ(eval_format("{{{0}}}", {"x"}), "{x}");
  EXPECT_EQ(eval_format("{0}{0}", {"ab"}), "abab");
}

TEST(EvalFormat, Errors) {
  EXPECT_THROW(eval_format("{1}", {"x"}), FormatIndexError);
  EXPECT_THROW(eval_format("{0", {"x"}), FormatSyntaxError);
  EXPECT_THROW(eval_format("a}b", {}), FormatSyntaxError);
}

// Placeholders over a random permutation put every argument back in place.
TEST(EvalFormat, PermutationProperty) {
  std::mt19937 rng(7);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 1 + rng() % 9;
    std::vector<std::string> pieces(n);
    for (auto& p : pieces)
      for (int k = 0, len = 1 + static_cast<int>(rng() % 5); k < len; ++k) p += static_cast<char>('a' + rng() % 26);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    // pieces[i] sits at argument perm[i]
    std::vector<std::string> args(n);
    std::string format, want;
    for (std::size_t i = 0; i < n; ++i) {
      args[perm[i]] = pieces[i];
      format += "{" + std::to_string(perm[i]) + "}";
      want += pieces[i];
    }
    EXPECT_EQ(eval_format(format, args), want);
  }
}

TEST(EvalReplace, Examples) {
  EXPECT_EQ(eval_replace("UjmQyj9bw1UjmA5vuovnUjm", "Ujm", "\\"), "\\Qyj9bw1\\A5vuovn\\");
  EXPECT_EQ(eval_replace("abc", "x", "y"), "abc");
  EXPECT_EQ(eval_replace("=PO32=PO32", "=PO32", "/"), "//");
  EXPECT_EQ(eval_replace("aaa", "aa", "b"), "ba");
  EXPECT_EQ(eval_replace("AbA", "a", "x"), "AbA");
}

TEST(EvalSplit, Examples) {
  EXPECT_EQ(eval_split("a@b@c", "@"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(eval_split("@x@", "@"), (std::vector<std::string>{"x"}));
  EXPECT_EQ(eval_split("abc", "@"), (std::vector<std::string>{"abc"}));
  EXPECT_THROW(eval_split("abc", ""), SplitSeparatorError);
}

// Joining non-empty pieces and splitting again gives the pieces back.
TEST(EvalSplit, JoinSplitProperty) {
  std::mt19937 rng(11);
  for (int round = 0; round < 200; ++round) {
    std::vector<std::string> pieces(1 + rng() % 8);
    std::string joined;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      for (int k = 0, len = 1 + static_cast<int>(rng() % 6); k < len; ++k)
        pieces[i] += static_cast<char>('a' + rng() % 26);
      if (i) joined += "@";
      joined += pieces[i];
    }
    EXPECT_EQ(eval_split(joined, "@"), pieces);
  }
}

TEST(EvalCharcast, Examples) {
  EXPECT_EQ(eval_charcast(64), "@");
  EXPECT_EQ(eval_charcast(92), "\\");
  EXPECT_EQ(eval_charcast(97), "a");
  EXPECT_EQ(eval_charcast(0xE9), "\xC3\xA9");
  EXPECT_THROW(eval_charcast(-1), CharRangeError);
  EXPECT_EQ(eval_charcast(0x1F600), "\xF0\x9F\x98\x80");
  EXPECT_THROW(eval_charcast(0x110000), CharRangeError);
  EXPECT_THROW(eval_charcast(0xD800), CharRangeError);
}

TEST(FoldExpr, NestedConcat) {
  auto v = fold("('T'+('ls1'+'2'))");
  EXPECT_EQ(v, Value::of_text("Tls12"));
}

TEST(FoldExpr, UnboundReadsEmptyAndCounts) {
  Environment env;
  auto v = fold("$never_assigned", env);
  EXPECT_EQ(v, Value::of_text(""));
  EXPECT_EQ(env.read_of_unbound(), 1u);
}

TEST(FoldExpr, EffectfulCallIsUnknown) {
  Environment env;
  env.bind("c", Value::unknown());
  EXPECT_FALSE(fold("$c.downloadfile('http://a.example/x', 'y')", env).known());
  EXPECT_FALSE(fold("'abc'.downloadfile('x')").known());
}

TEST(FoldExpr, UnknownPropagates) {
  Environment env;
  env.bind("u", Value::unknown());
  EXPECT_FALSE(fold("'a'+$u", env).known());
  EXPECT_FALSE(fold("'{0}' -f $u", env).known());
  EXPECT_FALSE(fold("$u.replace('a','b')", env).known());
  EXPECT_FALSE(fold("'{3}' -f 'a'").known());  // bad index degrades, never throws
}

TEST(FoldExpr, EnvironmentIsCaseInsensitive) {
  Environment env;
  env.bind("wxor", Value::of_text("q"));
  EXPECT_EQ(fold("$WXOR+$wXoR", env), Value::of_text("qq"));
  EXPECT_EQ(env.read_of_unbound(), 0u);
}

TEST(FoldExpr, DoesNotMutateBindings) {
  Environment env;
  env.bind("a", Value::of_text("x"));
  auto before = env.bindings();
  fold("$a+$b+'{0}' -f $a", env);
  EXPECT_EQ(env.bindings(), before);
}

TEST(FoldExpr, SplitGivesList) {
  auto v = fold("('a@b'+'@c').split('@')");
  EXPECT_EQ(v, Value::of_list({"a", "b", "c"}));
}

TEST(FoldExpr, TypeCastGivesTypeName) {
  auto v = fold("[TYPe](\"{1}{0}\" -F 'EM.IO.File','SyST')");
  EXPECT_EQ(v.kind, ValueKind::TypeName);
  EXPECT_EQ(v.text, "system.io.file");
}

TEST(FoldExpr, CountsTransforms) {
  FoldStats stats;
  auto src = std::string("('a'+'b')+[char]64");
  fold_expr(parse_expression(tokenize(src), src), {}, &stats);
  EXPECT_GE(stats.transforms, 3u);
}

// Committed expected values, cross-checked by tests/oracle/ps_expr_oracle.py.
TEST(FoldDifferential, CommittedFixtures) {
  std::istringstream in(read_data("fold_cases.jsonl"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = nlohmann::json::parse(line);
    const std::string id = c["id"], expr = c["expr"];
    Value got = fold(expr);
    if (c["expected"].is_array()) {
      EXPECT_EQ(got, Value::of_list(c["expected"].get<std::vector<std::string>>())) << id << ": " << expr;
    } else {
      ASSERT_TRUE(got.is_text()) << id << ": " << expr;
      EXPECT_EQ(got.text, c["expected"].get<std::string>()) << id << ": " << expr;
    }
    ++n;
  }
  EXPECT_GE(n, 50u);
}

TEST(QuotePsString, LexesBack) {
  for (std::string s : {"", "a", "it's", "‘x’", "a`b$c\"d", "\\"}) {
    auto q = quote_ps_string(s);
    auto toks = tokenize(q);
    ASSERT_EQ(toks.size(), 1u) << q;
    EXPECT_EQ(toks[0].text, s);
  }
}

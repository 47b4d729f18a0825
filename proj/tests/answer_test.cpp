#include <random>

#include <gtest/gtest.h>

#include "logicforge/answer.hpp"

using namespace logicforge;

TEST(NormalizeAnswer, NumberWithWhitespace) {
  auto a = normalize_answer("  42.0\n", AnswerKind::number);
  EXPECT_EQ(a.kind, AnswerKind::number);
  EXPECT_EQ(a.number(), 42.0);
  EXPECT_EQ(a, normalize_answer("42"));
  EXPECT_EQ(a.render(), "42");
}

TEST(NormalizeAnswer, BooleanFolding) {
  auto yes = normalize_answer("Yes.");
  EXPECT_EQ(yes.kind, AnswerKind::boolean);
  EXPECT_TRUE(yes.boolean());
  auto no = normalize_answer("no");
  EXPECT_EQ(no.kind, AnswerKind::boolean);
  EXPECT_FALSE(no.boolean());
  EXPECT_TRUE(normalize_answer("1", AnswerKind::boolean).boolean());
  EXPECT_TRUE(normalize_answer("TRUE").boolean());
}

TEST(NormalizeAnswer, ChoiceLabel) {
  auto c = normalize_answer("(B)", AnswerKind::choice_label);
  EXPECT_EQ(c.kind, AnswerKind::choice_label);
  EXPECT_EQ(c.label(), "B");
  EXPECT_EQ(normalize_answer("c)", AnswerKind::choice_label).label(), "C");
  EXPECT_EQ(normalize_answer("d", AnswerKind::choice_label).label(), "D");
  // without a hint a bare lowercase letter stays a string
  EXPECT_EQ(normalize_answer("d").kind, AnswerKind::string);
}

TEST(NormalizeAnswer, NumberForms) {
  EXPECT_EQ(normalize_answer("$1,234.50").number(), 1234.5);
  EXPECT_EQ(normalize_answer("+7").number(), 7.0);
  EXPECT_EQ(normalize_answer("-0").render(), "0");
  EXPECT_EQ(normalize_answer("2.5e-7").render(), "2.5e-07");
  EXPECT_EQ(normalize_answer("0.0001").render(), "0.0001");
  EXPECT_EQ(normalize_answer("12.").number(), 12.0);
}

TEST(NormalizeAnswer, UnparseableWithHint) {
  EXPECT_THROW(normalize_answer("banana", AnswerKind::number), Unparseable);
  EXPECT_THROW(normalize_answer("maybe", AnswerKind::boolean), Unparseable);
  EXPECT_THROW(normalize_answer("(AB)", AnswerKind::choice_label), Unparseable);
  EXPECT_THROW(normalize_answer("inf", AnswerKind::number), Unparseable);
  try {
    normalize_answer("x", AnswerKind::number);
  } catch (const Unparseable& e) {
    EXPECT_EQ(e.kind(), AnswerKind::number);
  }
}

TEST(NormalizeAnswer, StringFolding) {
  auto s = normalize_answer("  The   Red\tHouse. ");
  EXPECT_EQ(s.kind, AnswerKind::string);
  EXPECT_EQ(s.label(), "the red house");
}

TEST(AnswersMatch, Examples) {
  EXPECT_TRUE(answers_match(normalize_answer("0.3333333333"), normalize_answer("0.333333333333")));
  EXPECT_FALSE(answers_match(normalize_answer("true"), normalize_answer("(B)", AnswerKind::choice_label)));
  EXPECT_FALSE(answers_match(normalize_answer("100.0"), normalize_answer("100.2")));
  // absolute floor near zero
  EXPECT_TRUE(answers_match(normalize_answer("0"), normalize_answer("1e-10")));
  EXPECT_FALSE(answers_match(normalize_answer("0"), normalize_answer("1e-8")));
  EXPECT_TRUE(answers_match(normalize_answer("100.0"), normalize_answer("100.2"), 1e-2));
}

namespace {

std::string random_raw(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces{
      "42", "-3.5", "1,000", "$12", "7%", "yes", "No.", "TRUE", "false", "(C)", "b)", "A", "z",
      "  ", ".", "the", "Answer", "1e20", "3e-9", "0.1", "x y", "\t", "-0", "+8", "inf", "é", "(",
      ")", "1/3", "12.", "nan"};
  std::string s;
  for (int n = 1 + static_cast<int>(rng() % 3); n > 0; --n) s += pieces[rng() % pieces.size()];
  return s;
}

}  // namespace

TEST(AnswerProperties, NormalizationIsIdempotent) {
  std::mt19937_64 rng(11);
  const std::optional<AnswerKind> hints[] = {std::nullopt, AnswerKind::number, AnswerKind::boolean,
                                             AnswerKind::choice_label, AnswerKind::string};
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    std::string raw = random_raw(rng);
    for (auto hint : hints) {
      CanonicalAnswer once;
      try {
        once = normalize_answer(raw, hint);
      } catch (const Unparseable&) {
        continue;
      }
      ASSERT_EQ(normalize_answer(once.render(), hint), once) << "raw='" << raw << "'";
      ++checked;
    }
  }
  EXPECT_GT(checked, 10000);
}

TEST(AnswerProperties, MatchIsSymmetricAndReflexive) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> mag(-12, 12);
  for (int i = 0; i < 5000; ++i) {
    double x = std::pow(10.0, mag(rng)) * (rng() % 2 ? 1 : -1);
    double y = x * (1 + std::uniform_real_distribution<double>(-3e-6, 3e-6)(rng));
    CanonicalAnswer a{AnswerKind::number, x}, b{AnswerKind::number, y};
    EXPECT_EQ(answers_match(a, b), answers_match(b, a));
    EXPECT_TRUE(answers_match(a, a));
    auto ra = normalize_answer(random_raw(rng));
    auto rb = normalize_answer(random_raw(rng));
    EXPECT_EQ(answers_match(ra, rb), answers_match(rb, ra));
    EXPECT_TRUE(answers_match(ra, ra));
  }
}

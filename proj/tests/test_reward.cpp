#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "checkrl/reward.hpp"
#include "checkrl/rng.hpp"

using namespace checkrl;

namespace {

// Independent oracles.
double fmt_oracle(std::size_t l) {
  if (l == 0) return 0.0;
  if (l < 20) return 0.5;
  if (l < 80) return 0.5 + (static_cast<double>(l) - 20.0) / 120.0;
  return 1.0;
}

double base_oracle(int em, double f1, double fmt) { return 7.0 / 12.0 * em + 0.25 * f1 + fmt / 6.0; }

std::vector<std::string> refs(std::initializer_list<const char*> xs) { return {xs.begin(), xs.end()}; }

Verdict random_verdict(Rng& rng) {
  const Label labels[] = {Label::Entail, Label::Neutral, Label::Contradict};
  return Verdict{labels[rng.index(3)], rng.uniform()};
}

}  // namespace

TEST_CASE("normalize_text examples") {
  CHECK(normalize_text("The Cat!") == std::vector<std::string>{"cat"});
  CHECK(normalize_text("").empty());
  CHECK(normalize_text("An apple a day") == std::vector<std::string>{"apple", "day"});
  CHECK(normalize_text("  Theory, then   THE end. ") == std::vector<std::string>{"theory", "then", "end"});
}

TEST_CASE("char_length counts unicode scalars") {
  CHECK(char_length("") == 0);
  CHECK(char_length("abc") == 3);
  CHECK(char_length("h\xc3\xa9llo") == 5);
  CHECK(char_length("\xe4\xb8\xad\xe6\x96\x87") == 2);
}

TEST_CASE("exact_match examples") {
  CHECK(exact_match("The cat", refs({"cat"})) == 1);
  CHECK(exact_match("dog", refs({"cat"})) == 0);
  CHECK(exact_match("cat", refs({"a cat.", "dog"})) == 1);
  CHECK_THROWS_AS(exact_match("cat", {}), std::invalid_argument);
}

TEST_CASE("token_f1 examples") {
  CHECK(token_f1("aspirin reduces fever", refs({"aspirin reduces fever and pain"})) == doctest::Approx(0.75));
  CHECK(token_f1("warfarin dose", refs({"warfarin dose"})) == 1.0);
  CHECK(token_f1("alpha beta", refs({"gamma delta"})) == 0.0);
  CHECK(token_f1("", refs({"gamma"})) == 0.0);
  CHECK(token_f1("gamma", refs({"the"})) == 0.0);
  // Multiset overlap: one "x" matches once.
  CHECK(token_f1("x x", refs({"x y"})) == doctest::Approx(0.5));
  // Best reference wins; the article is dropped, leaving "b" against "b c".
  CHECK(token_f1("a b", refs({"zz", "b c"})) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(token_f1("cat", {}), std::invalid_argument);
}

TEST_CASE("token_f1 is permutation invariant and em implies f1 = 1") {
  Rng rng(11);
  const std::vector<std::string> vocab{"alpha", "beta", "gamma", "delta", "the", "eps", "zeta"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::string> p;
    std::vector<std::string> r;
    for (std::size_t i = 0, n = rng.index(6); i < n; ++i) p.push_back(vocab[rng.index(vocab.size())]);
    for (std::size_t i = 0, n = 1 + rng.index(6); i < n; ++i) r.push_back(vocab[rng.index(vocab.size())]);
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& w : v) s += w + " ";
      return s;
    };
    const std::vector<std::string> ref{join(r)};
    const double f = token_f1(join(p), ref);
    auto q = p;
    for (std::size_t i = q.size(); i > 1; --i) std::swap(q[i - 1], q[rng.index(i)]);
    CHECK(token_f1(join(q), ref) == doctest::Approx(f).epsilon(1e-12));
    if (exact_match(join(p), ref) == 1 && !normalize_text(join(p)).empty()) CHECK(f == 1.0);
  }
}

TEST_CASE("fmt_score piecewise values") {
  const std::size_t ls[] = {0, 10, 20, 50, 80, 200};
  const double expected[] = {0.0, 0.5, 0.5, 0.75, 1.0, 1.0};
  for (int i = 0; i < 6; ++i) CHECK(fmt_score(ls[i]) == expected[i]);
  for (std::size_t l = 0; l < 500; ++l) CHECK(fmt_score(l) == doctest::Approx(fmt_oracle(l)).epsilon(1e-15));
}

TEST_CASE("fmt_score is non-decreasing and continuous at 80") {
  for (std::size_t l = 1; l < 1000; ++l) CHECK(fmt_score(l) >= fmt_score(l - 1));
  CHECK(fmt_score(79) == doctest::Approx(1.0 - 1.0 / 120.0));
  CHECK(1.0 - fmt_score(79) <= 1.0 / 120.0 + 1e-15);
}

TEST_CASE("base_reward examples") {
  const RewardWeights w;
  CHECK(base_reward(1, 1.0, 1.0, w) == 1.0);
  CHECK(base_reward(0, 0.0, 1.0, w) == doctest::Approx(1.0 / 6.0));
  CHECK(base_reward(1, 0.5, 0.0, w) == doctest::Approx(7.0 / 12.0 + 1.0 / 8.0));
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const int em = static_cast<int>(rng.index(2));
    const double f1 = rng.uniform();
    const double fm = rng.uniform();
    CHECK(base_reward(em, f1, fm, w) == doctest::Approx(base_oracle(em, f1, fm)).epsilon(1e-12));
  }
}

TEST_CASE("reward weights are validated") {
  RewardWeights zero{0.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(zero.validate(), std::invalid_argument);
  RewardWeights negative{0.35, -0.1, 0.1, 1.0};
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
  CHECK_THROWS_AS(base_reward(1, 1, 1, zero), std::invalid_argument);
}

TEST_CASE("phi_check examples") {
  const std::vector<Verdict> mixed{{Label::Entail, 0.8}, {Label::Contradict, 1.0}};
  CHECK(phi_check(mixed).value == doctest::Approx(-0.35));

  const std::vector<Verdict> neutral{{Label::Neutral, 0.9}, {Label::Neutral, 0.4}};
  CHECK(phi_check(neutral).value == 0.0);

  const std::vector<Verdict> contra(4, Verdict{Label::Contradict, 1.0});
  const auto p = phi_check(contra);
  CHECK(p.raw == doctest::Approx(-1.5));
  CHECK(p.value == -1.0);
  CHECK(1.0 + p.value == 0.0);

  const auto empty = phi_check({});
  CHECK(empty.no_claims);
  CHECK(empty.value == 0.0);
}

TEST_CASE("phi_check is order invariant and monotone in entailment") {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<Verdict> v;
    for (std::size_t i = 0, n = 1 + rng.index(8); i < n; ++i) v.push_back(random_verdict(rng));
    const double phi = phi_check(v).value;
    auto shuffled = v;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.index(i)]);
    CHECK(phi_check(shuffled).value == doctest::Approx(phi).epsilon(1e-12));
    for (auto& x : v)
      if (x.label == Label::Neutral) {
        x.label = Label::Entail;
        break;
      }
    CHECK(phi_check(v).value >= phi - 1e-12);
  }
}

TEST_CASE("format_penalty examples") {
  CHECK(format_penalty(std::nullopt) == -0.5);
  CHECK(format_penalty(std::string(30, 'x')) == -0.3);
  CHECK(format_penalty(std::string(49, 'x')) == -0.3);
  CHECK(format_penalty(std::string(50, 'x')) == 0.0);
  CHECK(format_penalty(std::string(80, 'x')) == 0.0);
}

TEST_CASE("total_reward examples") {
  const RewardWeights w;
  RewardBreakdown full;
  full.em = 1;
  full.f1 = 1.0;
  full.fmt_score = 1.0;
  full.phi_check = 1.0;
  CHECK(total_reward(full, w).r_base == 1.0);
  CHECK(total_reward(full, w).total == 2.0);

  // r_base = 0.5 needs F1-only weights; em is binary under the defaults.
  const RewardWeights f1_only{0.0, 1.0, 0.0, 1.0};
  RewardBreakdown half;
  half.f1 = 0.5;
  half.phi_check = 0.0;
  half.p_fmt = -0.3;
  CHECK(total_reward(half, f1_only).total == doctest::Approx(0.2));

  full.phi_check = -1.0;
  full.p_fmt = -0.5;
  CHECK(total_reward(full, w).total == -0.5);

  RewardBreakdown alpha;
  alpha.f1 = 0.5;
  alpha.phi_check = 0.5;
  const RewardWeights doubled{0.0, 1.0, 0.0, 2.0};
  CHECK(total_reward(alpha, doubled).total == doctest::Approx(1.0));
}

TEST_CASE("score_answer composes the pieces") {
  AnswerScoring s;
  const auto r = refs({"aspirin reduces fever and pain"});
  const auto missing = score_answer(std::nullopt, r, std::nullopt, s);
  CHECK(missing.total == -0.5);
  CHECK(missing.fmt_score == 0.0);

  const std::string answer = "aspirin reduces fever";
  const auto b = score_answer(answer, r, PhiCheck{0.5, 0.5, false}, s);
  CHECK(b.em == 0);
  CHECK(b.f1 == doctest::Approx(0.75));
  CHECK(b.fmt_score == doctest::Approx(fmt_oracle(answer.size())));
  CHECK(b.p_fmt == -0.3);
  CHECK(b.total == doctest::Approx(base_oracle(0, 0.75, fmt_oracle(answer.size())) * 1.5 - 0.3));

  s.format_penalty_enabled = false;
  CHECK(score_answer(answer, r, std::nullopt, s).p_fmt == 0.0);
}

TEST_CASE("reward stays inside the stated envelope over 1e5 random inputs") {
  Rng rng(2024);
  const RewardWeights w;
  const double penalties[] = {0.0, -0.3, -0.5};
  double lo = 1e9;
  double hi = -1e9;
  for (int i = 0; i < 100000; ++i) {
    RewardBreakdown b;
    b.em = static_cast<int>(rng.index(2));
    b.f1 = b.em ? 1.0 : rng.uniform();
    b.fmt_score = rng.uniform();
    b.phi_check = rng.uniform(-1.0, 1.0);
    b.p_fmt = penalties[rng.index(3)];
    const double r = total_reward(b, w).total;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    REQUIRE(r >= -1.5);
    REQUIRE(r <= 2.0);
  }
  // Under the clamp the reachable floor is -0.5.
  CHECK(lo >= -0.5);
  CHECK(hi <= 2.0);
}

TEST_CASE("zero base reward leaves only the format penalty") {
  Rng rng(77);
  const RewardWeights w;
  for (int i = 0; i < 10000; ++i) {
    RewardBreakdown b;
    b.phi_check = rng.uniform(-1.0, 1.0);
    b.p_fmt = -0.5 * rng.uniform();
    const auto out = total_reward(b, w);
    REQUIRE(out.r_base == 0.0);
    REQUIRE(out.total == b.p_fmt);
  }
}

TEST_CASE("all neutral verdicts collapse the multiplier to one") {
  Rng rng(9);
  const RewardWeights w;
  for (int i = 0; i < 1000; ++i) {
    std::vector<Verdict> v(1 + rng.index(6), Verdict{Label::Neutral, rng.uniform()});
    RewardBreakdown b;
    b.em = 0;
    b.f1 = rng.uniform();
    b.fmt_score = rng.uniform();
    b.phi_check = phi_check(v).value;
    b.p_fmt = -0.3;
    const auto out = total_reward(b, w);
    CHECK(out.total == doctest::Approx(base_oracle(0, b.f1, b.fmt_score) - 0.3).epsilon(1e-12));
  }
}

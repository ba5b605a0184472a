#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "checkrl/checker.hpp"

using namespace checkrl;

namespace {

ClaimSet supported_claims(std::size_t n, double alignment = 1.0) {
  ClaimSet c;
  for (std::size_t i = 0; i < n; ++i) c.push_back({"claim about f" + std::to_string(i % 4), "f" + std::to_string(i % 4), alignment});
  return c;
}

ClaimSet unsupported_claims(std::size_t n) {
  ClaimSet c;
  for (std::size_t i = 0; i < n; ++i) c.push_back({"claim about nothing", "missing", 1.0});
  return c;
}

const std::string kEvidence = "passage text f0 f1 f2 f3 more text";

struct Counts {
  std::size_t entail = 0, neutral = 0, contradict = 0;
};

Counts tally(const std::vector<Verdict>& v) {
  Counts c;
  for (const auto& x : v) {
    if (x.label == Label::Entail) ++c.entail;
    if (x.label == Label::Neutral) ++c.neutral;
    if (x.label == Label::Contradict) ++c.contradict;
  }
  return c;
}

}  // namespace

TEST_CASE("sentence-split extractor examples") {
  CHECK(extract_claims("A works well. B fails badly.").size() == 2);
  CHECK(extract_claims("").empty());
  CHECK(extract_claims("Yes.").empty());
  const auto c = extract_claims("It is fine! Is it really true? short one. no terminator at all");
  REQUIRE(c.size() == 3);
  CHECK(c[0].text == "It is fine!");
  CHECK(c[1].text == "Is it really true?");
  CHECK(c[2].text == "no terminator at all");
  // A period inside a number is not a terminator.
  CHECK(extract_claims("The dose is 2.5 mg daily.").size() == 1);
  for (const auto& x : extract_claims("alpha beta gamma. delta epsilon zeta.")) CHECK(x.support_key.empty());
}

TEST_CASE("non-English marker detection") {
  CHECK(is_non_english("[zh] f3 something"));
  CHECK_FALSE(is_non_english("plain english f3"));
}

TEST_CASE("verdict count equals claim count for every profile") {
  Rng rng(1);
  for (const auto& p : {collapsed_profile(), moderate_profile(), strong_profile()}) {
    const SimChecker checker(p);
    for (std::size_t n = 0; n < 30; ++n) {
      const auto out = checker.check("q", supported_claims(n), kEvidence, rng);
      CHECK(out.ok());
      CHECK(out.verdicts.size() == n);
    }
  }
}

TEST_CASE("no evidence gives all neutral and phi exactly zero") {
  Rng rng(2);
  for (const auto& p : {collapsed_profile(), moderate_profile(), strong_profile()}) {
    for (const std::string ev : {"", "   \n\t "}) {
      const auto v = score_claims(p, supported_claims(50), ev, rng);
      CHECK(tally(v).neutral == 50);
      CHECK(phi_check(v).value == 0.0);
    }
  }
}

TEST_CASE("collapsed profile is at least 95 percent neutral") {
  Rng rng(3);
  std::vector<Verdict> all;
  for (int i = 0; i < 100; ++i) {
    auto v = score_claims(collapsed_profile(), i % 2 ? supported_claims(100) : unsupported_claims(100), kEvidence, rng);
    all.insert(all.end(), v.begin(), v.end());
  }
  CHECK(all.size() == 10000);
  CHECK(static_cast<double>(tally(all).neutral) / 1e4 >= 0.95);
}

TEST_CASE("collapsed profile keeps phi near zero on 100-claim batches") {
  Rng rng(4);
  int inside = 0;
  const int batches = 2000;
  for (int i = 0; i < batches; ++i) {
    const double phi = phi_check(score_claims(collapsed_profile(), supported_claims(100), kEvidence, rng)).value;
    if (phi >= -0.05 && phi <= 0.05) ++inside;
  }
  CHECK(static_cast<double>(inside) / batches >= 0.99);
}

TEST_CASE("moderate and strong entail rates on aligned supported claims") {
  Rng rng(5);
  const auto m = tally(score_claims(moderate_profile(), supported_claims(10000), kEvidence, rng));
  const auto s = tally(score_claims(strong_profile(), supported_claims(10000), kEvidence, rng));
  CHECK(std::abs(static_cast<double>(s.entail) / 1e4 - 0.86) < 0.03);
  CHECK(std::abs(static_cast<double>(m.entail) / 1e4 - 0.54) < 0.03);
}

TEST_CASE("strong dominates moderate in entail rate at equal alignment") {
  for (double a : {0.2, 0.5, 0.8, 1.0}) {
    CAPTURE(a);
    Rng r1(6), r2(6);
    const auto m = tally(score_claims(moderate_profile(), supported_claims(5000, a), kEvidence, r1));
    const auto s = tally(score_claims(strong_profile(), supported_claims(5000, a), kEvidence, r2));
    CHECK(s.entail >= m.entail);
  }
}

TEST_CASE("unsupported claims carry more contradiction risk") {
  Rng rng(7);
  const auto sup = tally(score_claims(strong_profile(), supported_claims(10000), kEvidence, rng));
  const auto uns = tally(score_claims(strong_profile(), unsupported_claims(10000), kEvidence, rng));
  CHECK(uns.contradict > 5 * sup.contradict);
  CHECK(uns.entail < sup.entail);
}

TEST_CASE("english-only profiles return neutral for non-English claims") {
  Rng rng(8);
  ClaimSet c;
  for (int i = 0; i < 200; ++i) c.push_back({"[zh] claim f0", "f0", 1.0});
  CHECK(tally(score_claims(strong_profile(), c, kEvidence, rng)).neutral == 200);
  auto open = strong_profile();
  open.english_only = false;
  CHECK(tally(score_claims(open, c, kEvidence, rng)).entail > 100);
}

TEST_CASE("confidences fall in the configured range") {
  Rng rng(9);
  auto p = moderate_profile();
  p.confidence_lo = 0.2;
  p.confidence_hi = 0.4;
  for (const auto& v : score_claims(p, supported_claims(1000), kEvidence, rng)) {
    CHECK(v.confidence >= 0.2);
    CHECK(v.confidence <= 0.4);
  }
}

TEST_CASE("later verdicts do not depend on earlier outcomes") {
  // Changing claim 0 must not shift the draws used for claims 1..n.
  ClaimSet a = supported_claims(20);
  ClaimSet b = a;
  b[0] = {"claim about nothing", "missing", 0.0};
  Rng r1(10), r2(10);
  const auto va = score_claims(strong_profile(), a, kEvidence, r1);
  const auto vb = score_claims(strong_profile(), b, kEvidence, r2);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(va[i] == vb[i]);
}

TEST_CASE("truncate_tokens") {
  CHECK(truncate_tokens("a  b\nc d", 3) == "a b c");
  CHECK(truncate_tokens("a b", 10) == "a b");
  CHECK(truncate_tokens("", 5).empty());
  CHECK(truncate_tokens("a b", 0).empty());
}

TEST_CASE("truncation never raises support and unlimited matches the base profile") {
  // Supporting tokens sit at increasing depths of a 1000-token evidence text.
  std::string evidence;
  for (int i = 0; i < 1000; ++i) evidence += (i % 100 == 99 ? "f" + std::to_string(i / 100) : "w") + " ";
  ClaimSet claims;
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k < 300; ++k) claims.push_back({"claim f" + std::to_string(i), "f" + std::to_string(i), 1.0});

  double prev = -1.0;
  for (std::optional<std::size_t> lim : {std::optional<std::size_t>{128}, std::optional<std::size_t>{256},
                                         std::optional<std::size_t>{512}, std::optional<std::size_t>{768},
                                         std::optional<std::size_t>{}}) {
    Rng rng(11);
    const double rate = static_cast<double>(tally(score_claims(truncation_scenario(strong_profile(), lim), claims,
                                                               evidence, rng)).entail) /
                        static_cast<double>(claims.size());
    CHECK(rate >= prev);
    prev = rate;
  }
  Rng a(12), b(12);
  CHECK(score_claims(truncation_scenario(strong_profile(), std::nullopt), claims, evidence, a) ==
        score_claims(strong_profile(), claims, evidence, b));
}

TEST_CASE("profile lookup and validation") {
  CHECK(profile_by_name("collapsed")->neutral_floor == 0.97);
  CHECK(profile_by_name("moderate")->name == "moderate");
  CHECK_FALSE(profile_by_name("weak"));
  auto p = strong_profile();
  p.entail_unsupported = 0.8;
  p.contradict_unsupported = 0.3;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = strong_profile();
  p.confidence_lo = 0.9;
  p.confidence_hi = 0.8;
  CHECK_THROWS_AS(SimChecker{p}, std::invalid_argument);
  CHECK(to_string(CheckErrorKind::CountMismatch) == "count-mismatch");
}

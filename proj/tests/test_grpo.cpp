#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "checkrl/grpo.hpp"

using namespace checkrl;

namespace {

// Oracle: the surrogate recomputed from scratch on raw logit vectors.
struct OracleFactor {
  std::vector<double> logits;
  std::vector<bool> allowed;
};

std::vector<double> oracle_softmax(const OracleFactor& f, double t) {
  std::vector<double> p(f.logits.size(), 0.0);
  double z = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (f.allowed[j]) z += std::exp(f.logits[j] / t);
  for (std::size_t j = 0; j < p.size(); ++j)
    if (f.allowed[j]) p[j] = std::exp(f.logits[j] / t) / z;
  return p;
}

double oracle_surrogate(const std::vector<OracleFactor>& fs, const std::vector<OracleFactor>& ref, double t,
                        const std::vector<BehaviorAction>& actions, const std::vector<double>& adv, double c_ent,
                        double c_kl) {
  double pg = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto idx = actions[i].indices();
    for (std::size_t f = 0; f < fs.size(); ++f) pg += adv[i] * std::log(oracle_softmax(fs[f], t)[idx[f]]);
  }
  pg /= static_cast<double>(actions.size());
  double h = 0.0;
  double d = 0.0;
  for (std::size_t f = 0; f < fs.size(); ++f) {
    const auto p = oracle_softmax(fs[f], t);
    const auto q = oracle_softmax(ref[f], t);
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] <= 0) continue;
      h -= p[j] * std::log(p[j]);
      d += p[j] * std::log(p[j] / q[j]);
    }
  }
  return pg + c_ent * h - c_kl * d;
}

std::vector<OracleFactor> to_oracle(const ToyPolicy& p) {
  std::vector<OracleFactor> out;
  for (const auto& f : p.factors()) out.push_back({f.logits, f.allowed});
  return out;
}

ToyPolicy random_policy(Rng& rng) {
  ToyPolicy p;
  for (std::size_t f = 0; f < p.factors().size(); ++f) {
    std::vector<double> l(p.factor(f).logits.size());
    for (auto& v : l) v = rng.uniform(-2.0, 2.0);
    p.set_logits(f, l);
  }
  return p;
}

std::vector<BehaviorAction> random_actions(const ToyPolicy& p, Rng& rng, std::size_t n) {
  std::vector<BehaviorAction> a;
  for (std::size_t i = 0; i < n; ++i) a.push_back(p.sample(rng));
  return a;
}

void check_gradient(const ToyPolicy& policy, const ToyPolicy& reference, const std::vector<BehaviorAction>& actions,
                    const std::vector<double>& adv, const UpdateConfig& cfg) {
  const auto g = surrogate_gradient(policy, reference, actions, adv, cfg);
  auto fs = to_oracle(policy);
  const auto ref = to_oracle(reference);
  const double t = policy.temperature();
  const double h = 1e-5;
  std::vector<double> fd;
  for (auto& f : fs)
    for (std::size_t j = 0; j < f.logits.size(); ++j) {
      const double x = f.logits[j];
      f.logits[j] = x + h;
      const double up = oracle_surrogate(fs, ref, t, actions, adv, cfg.entropy_coef, cfg.kl_coef);
      f.logits[j] = x - h;
      const double down = oracle_surrogate(fs, ref, t, actions, adv, cfg.entropy_coef, cfg.kl_coef);
      f.logits[j] = x;
      fd.push_back((up - down) / (2 * h));
    }
  REQUIRE(fd.size() == g.size());
  double scale = 0.0;
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    scale = std::max(scale, std::abs(fd[k]));
    err = std::max(err, std::abs(fd[k] - g[k]));
  }
  REQUIRE(scale > 0);
  CHECK(err / scale <= 1e-6);
}

}  // namespace

TEST_CASE("group advantages for [1,2,3] match the hand values") {
  const std::vector<double> r{1, 2, 3};
  const auto a = group_advantages(r);
  CHECK(a.mean == 2.0);
  CHECK(a.stddev == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  const double expect = 1.0 / (std::sqrt(2.0 / 3.0) + 1e-6);
  CHECK(std::abs(a.values[0] + expect) < 1e-9);
  CHECK(a.values[1] == 0.0);
  CHECK(std::abs(a.values[2] - expect) < 1e-9);
  CHECK(std::abs(a.values[2] - 1.22474) < 1e-5);
}

TEST_CASE("zero-variance groups give zero advantages") {
  const std::vector<double> r{5, 5, 5, 5};
  for (double v : group_advantages(r).values) CHECK(v == 0.0);
  const std::vector<double> one{0.3};
  CHECK(group_advantages(one).values[0] == 0.0);
}

TEST_CASE("two-element group is shrunk by epsilon") {
  const std::vector<double> r{0, 1};
  const auto a = group_advantages(r);
  CHECK(a.values[0] == doctest::Approx(-0.5 / (0.5 + 1e-6)).epsilon(1e-15));
  CHECK(a.values[0] > -1.0);
  CHECK(a.values[1] < 1.0);
}

TEST_CASE("group_advantages rejects bad input") {
  CHECK_THROWS_AS(group_advantages(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1, 2}, 0.0), std::invalid_argument);
}

TEST_CASE("advantages sum to zero and have near unit spread") {
  Rng rng(42);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> r(2 + rng.index(15));
    for (auto& v : r) v = rng.uniform(-2.0, 2.0);
    const auto a = group_advantages(r);
    const double sum = std::accumulate(a.values.begin(), a.values.end(), 0.0);
    CHECK(std::abs(sum) < 1e-9 * static_cast<double>(r.size()));
    double ss = 0.0;
    for (double v : a.values) ss += v * v;
    const double spread = std::sqrt(ss / static_cast<double>(r.size()));
    CHECK(spread == doctest::Approx(a.stddev / (a.stddev + 1e-6)).epsilon(1e-9));
  }
}

TEST_CASE("constant shift leaves advantages bitwise identical") {
  Rng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    // Dyadic rewards and power-of-two groups keep every sum and mean exact, so
    // any difference is a real bug.
    std::vector<double> r(std::size_t{2} << rng.index(4));
    for (auto& v : r) v = static_cast<double>(static_cast<int>(rng.index(512)) - 256) / 256.0;
    const double c = static_cast<double>(static_cast<int>(rng.index(64)) - 32) / 8.0;
    std::vector<double> shifted(r);
    for (auto& v : shifted) v += c;
    CHECK(group_advantages(r).values == group_advantages(shifted).values);
  }
}

TEST_CASE("positive affine scaling rescales advantages by the shared sigma") {
  const std::vector<double> r{0.1, 0.4, 0.2, 0.9};
  std::vector<double> scaled;
  for (double v : r) scaled.push_back(3.0 * v + 1.0);
  const auto a = group_advantages(r);
  const auto b = group_advantages(scaled);
  for (std::size_t i = 0; i < r.size(); ++i)
    CHECK(b.values[i] * (b.stddev + 1e-6) == doctest::Approx(3.0 * a.values[i] * (a.stddev + 1e-6)));
}

TEST_CASE("policy probabilities sum to one") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_policy(rng);
    if (trial % 3 == 0) p.mask(factor::kLanguage, 1);
    p.set_temperature(rng.uniform(0.2, 3.0));
    for (std::size_t f = 0; f < p.factors().size(); ++f) {
      const auto pr = p.probabilities(f);
      CHECK(std::accumulate(pr.begin(), pr.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("sampling is reproducible under a fixed seed") {
  ToyPolicy p;
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 1000; ++i) CHECK(p.sample(a) == p.sample(b));
}

TEST_CASE("a dominant logit is sampled almost always") {
  ToyPolicy p;
  p.set_logits(factor::kLength, {100, 0, 0, 0});
  Rng rng(3);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += p.sample(rng).length == LengthBucket::UltraShort;
  CHECK(static_cast<double>(hits) / 10000.0 > 0.999);
}

TEST_CASE("temperature zero picks the argmax") {
  ToyPolicy p;
  p.set_logits(factor::kLength, {0.1, 0.3, 2.0, 0.5});
  p.set_logits(factor::kSearch, {1.0, -1.0, 0.0});
  p.set_logits(factor::kLanguage, {-1.0, 0.5});
  p.set_logits(factor::kCheck, {0.2, 0.1});
  p.set_temperature(0.0);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto a = p.sample(rng);
    CHECK(a.length == LengthBucket::Medium);
    CHECK(a.searches == 0);
    CHECK(a.language == Language::NonEnglish);
    CHECK(a.check);
  }
}

TEST_CASE("masked entries are never sampled") {
  ToyPolicy p;
  p.set_logits(factor::kLanguage, {-5.0, 5.0});
  p.mask(factor::kLanguage, 1);
  Rng rng(6);
  for (int i = 0; i < 2000; ++i) CHECK(p.sample(rng).language == Language::English);
  CHECK_THROWS_AS(p.mask(factor::kLanguage, 0), std::invalid_argument);
}

TEST_CASE("entropy and kl examples") {
  ToyPolicy p;
  CHECK(entropy(p) == doctest::Approx(std::log(4.0) + std::log(3.0) + 2 * std::log(2.0)));
  CHECK(kl(p, p) == 0.0);

  ToyPolicy q;
  // softmax(x, 0) = (0.9, 0.1) when x = ln 9.
  q.set_logits(factor::kCheck, {std::log(9.0), 0.0});
  const double expect = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(kl(q, p) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(0.3681).epsilon(1e-4));
}

TEST_CASE("zero advantages and zero regularizers leave the policy unchanged") {
  Rng rng(12);
  const auto p = random_policy(rng);
  const auto actions = random_actions(p, rng, 16);
  const std::vector<double> adv(actions.size(), 0.0);
  UpdateConfig cfg;
  cfg.entropy_coef = 0.0;
  cfg.kl_coef = 0.0;
  CHECK(policy_update(p, p, actions, adv, cfg).flat_logits() == p.flat_logits());
}

TEST_CASE("a single positive advantage raises that action's probabilities") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_policy(rng);
    const std::vector<BehaviorAction> a{p.sample(rng)};
    const std::vector<double> adv{1.0};
    UpdateConfig cfg;
    cfg.lr = 0.1;
    cfg.entropy_coef = 0.0;
    cfg.kl_coef = 0.0;
    const auto next = policy_update(p, p, a, adv, cfg);
    const auto idx = a[0].indices();
    for (std::size_t f = 0; f < kFactorCount; ++f) CHECK(next.probabilities(f)[idx[f]] > p.probabilities(f)[idx[f]]);
  }
}

TEST_CASE("mismatched batches are rejected") {
  ToyPolicy p;
  const std::vector<BehaviorAction> a(3);
  const std::vector<double> adv(2, 0.0);
  CHECK_THROWS_AS(policy_update(p, p, a, adv, UpdateConfig{}), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(2718);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_policy(rng);
    auto ref = random_policy(rng);
    if (trial % 4 == 1) {
      p.mask(factor::kLanguage, 1);
      ref.mask(factor::kLanguage, 1);
    }
    const double t = trial % 2 == 0 ? 1.0 : rng.uniform(0.5, 2.0);
    p.set_temperature(t);
    ref.set_temperature(t);
    const auto actions = random_actions(p, rng, 4 + rng.index(30));
    std::vector<double> adv(actions.size());
    for (auto& v : adv) v = rng.uniform(-2.0, 2.0);
    UpdateConfig cfg;
    cfg.entropy_coef = trial % 3 == 0 ? 0.005 : rng.uniform(0.0, 0.2);
    cfg.kl_coef = trial % 3 == 0 ? 0.001 : rng.uniform(0.0, 0.2);
    check_gradient(p, ref, actions, adv, cfg);
  }
}

TEST_CASE("surrogate value agrees with the oracle") {
  Rng rng(31);
  auto p = random_policy(rng);
  auto ref = random_policy(rng);
  const auto actions = random_actions(p, rng, 10);
  std::vector<double> adv(actions.size());
  for (auto& v : adv) v = rng.uniform(-1.0, 1.0);
  const UpdateConfig cfg;
  CHECK(surrogate(p, ref, actions, adv, cfg) ==
        doctest::Approx(oracle_surrogate(to_oracle(p), to_oracle(ref), 1.0, actions, adv, cfg.entropy_coef,
                                         cfg.kl_coef))
            .epsilon(1e-12));
}

TEST_CASE("clipped gradient at ratio one equals the plain gradient") {
  Rng rng(77);
  const auto p = random_policy(rng);
  const auto actions = random_actions(p, rng, 12);
  std::vector<double> adv(actions.size());
  for (auto& v : adv) v = rng.uniform(-1.0, 1.0);
  UpdateConfig cfg;
  cfg.clip = 0.2;
  const auto plain = surrogate_gradient(p, p, actions, adv, cfg);
  const auto clipped = surrogate_gradient(p, p, actions, adv, cfg, &p);
  for (std::size_t k = 0; k < plain.size(); ++k) CHECK(clipped[k] == doctest::Approx(plain[k]).epsilon(1e-12));
}

TEST_CASE("clipping stops pushing an action past the trust region") {
  ToyPolicy behavior;
  ToyPolicy moved;
  moved.set_logits(factor::kLength, {3.0, 0.0, 0.0, 0.0});
  const std::vector<BehaviorAction> a{BehaviorAction::from_indices({0, 0, 0, 0})};
  const std::vector<double> adv{1.0};
  UpdateConfig cfg;
  cfg.entropy_coef = 0.0;
  cfg.kl_coef = 0.0;
  cfg.clip = 0.2;
  for (double g : surrogate_gradient(moved, behavior, a, adv, cfg, &behavior)) CHECK(g == 0.0);
}

TEST_CASE("multi-epoch updates are deterministic") {
  Rng rng(5);
  const auto p = random_policy(rng);
  const auto actions = random_actions(p, rng, 20);
  std::vector<double> adv(actions.size());
  for (auto& v : adv) v = rng.uniform(-1.0, 1.0);
  UpdateConfig cfg;
  cfg.epochs = 3;
  cfg.clip = 0.2;
  cfg.lr = 0.5;
  CHECK(policy_update(p, p, actions, adv, cfg).flat_logits() == policy_update(p, p, actions, adv, cfg).flat_logits());
}

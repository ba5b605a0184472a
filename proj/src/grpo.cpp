#include "checkrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace checkrl {

AdvantageVector group_advantages(std::span<const double> rewards, double epsilon) {
  if (rewards.empty()) throw std::invalid_argument("group_advantages: empty group");
  if (!(epsilon > 0)) throw std::invalid_argument("group_advantages: epsilon must be positive");
  AdvantageVector out;
  out.epsilon = epsilon;
  const double n = static_cast<double>(rewards.size());
  out.mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - out.mean) * (r - out.mean);
  out.stddev = std::sqrt(ss / n);
  out.values.reserve(rewards.size());
  for (double r : rewards) out.values.push_back((r - out.mean) / (out.stddev + epsilon));
  return out;
}

std::array<std::size_t, kFactorCount> BehaviorAction::indices() const {
  return {static_cast<std::size_t>(length), static_cast<std::size_t>(searches), static_cast<std::size_t>(language),
          check ? std::size_t{0} : std::size_t{1}};
}

BehaviorAction BehaviorAction::from_indices(const std::array<std::size_t, kFactorCount>& idx) {
  BehaviorAction a;
  a.length = static_cast<LengthBucket>(idx[factor::kLength]);
  a.searches = static_cast<int>(idx[factor::kSearch]);
  a.language = static_cast<Language>(idx[factor::kLanguage]);
  a.check = idx[factor::kCheck] == 0;
  return a;
}

std::string_view to_string(LengthBucket bucket) {
  switch (bucket) {
    case LengthBucket::UltraShort: return "ultra-short";
    case LengthBucket::Short: return "short";
    case LengthBucket::Medium: return "medium";
    case LengthBucket::Long: return "long";
  }
  return "long";
}

namespace {

Factor make_factor(std::string name, std::vector<std::string> labels) {
  Factor f{std::move(name), std::move(labels), {}, {}};
  f.logits.assign(f.labels.size(), 0.0);
  f.allowed.assign(f.labels.size(), true);
  return f;
}

// Softmax of logits / T over allowed entries.
std::vector<double> softmax(const Factor& f, double temperature) {
  std::vector<double> p(f.logits.size(), 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < p.size(); ++j)
    if (f.allowed[j]) mx = std::max(mx, f.logits[j]);
  if (temperature == 0.0) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (f.allowed[j] && f.logits[j] == mx) {
        p[j] = 1.0;
        break;
      }
    }
    return p;
  }
  double z = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!f.allowed[j]) continue;
    p[j] = std::exp((f.logits[j] - mx) / temperature);
    z += p[j];
  }
  for (double& v : p) v /= z;
  return p;
}

double factor_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0) h -= v * std::log(v);
  return h;
}

double factor_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0) continue;
    if (q[j] <= 0) return std::numeric_limits<double>::infinity();
    d += p[j] * std::log(p[j] / q[j]);
  }
  return d;
}

void check_batch(std::span<const BehaviorAction> actions, std::span<const double> advantages) {
  if (actions.size() != advantages.size())
    throw std::invalid_argument("policy_update: actions and advantages differ in length");
}

}  // namespace

ToyPolicy::ToyPolicy() {
  factors_.push_back(make_factor("length", {"ultra-short", "short", "medium", "long"}));
  factors_.push_back(make_factor("search", {"0", "1", "2"}));
  factors_.push_back(make_factor("language", {"en", "non-en"}));
  factors_.push_back(make_factor("check", {"yes", "no"}));
}

void ToyPolicy::set_temperature(double t) {
  if (!(t >= 0)) throw std::invalid_argument("temperature must be non-negative");
  temperature_ = t;
}

void ToyPolicy::set_logits(std::size_t f, std::vector<double> logits) {
  auto& fac = factors_.at(f);
  if (logits.size() != fac.logits.size()) throw std::invalid_argument("set_logits: wrong size for " + fac.name);
  fac.logits = std::move(logits);
}

void ToyPolicy::mask(std::size_t f, std::size_t entry) {
  auto& fac = factors_.at(f);
  fac.allowed.at(entry) = false;
  if (std::none_of(fac.allowed.begin(), fac.allowed.end(), [](bool b) { return b; }))
    throw std::invalid_argument("mask: factor " + fac.name + " has no allowed entry left");
}

std::vector<double> ToyPolicy::probabilities(std::size_t f) const { return softmax(factors_.at(f), temperature_); }

double ToyPolicy::log_prob(const BehaviorAction& action) const {
  const auto idx = action.indices();
  double lp = 0.0;
  for (std::size_t f = 0; f < factors_.size(); ++f) lp += std::log(probabilities(f)[idx[f]]);
  return lp;
}

BehaviorAction ToyPolicy::sample(Rng& rng) const {
  std::array<std::size_t, kFactorCount> idx{};
  for (std::size_t f = 0; f < factors_.size(); ++f) {
    const auto p = probabilities(f);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = p.size();
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] <= 0) continue;
      acc += p[j];
      pick = j;
      if (u < acc) break;
    }
    idx[f] = pick;
  }
  return BehaviorAction::from_indices(idx);
}

std::vector<double> ToyPolicy::flat_logits() const {
  std::vector<double> out;
  for (const auto& f : factors_) out.insert(out.end(), f.logits.begin(), f.logits.end());
  return out;
}

void ToyPolicy::set_flat_logits(std::span<const double> flat) {
  std::size_t k = 0;
  for (auto& f : factors_) {
    if (k + f.logits.size() > flat.size()) throw std::invalid_argument("set_flat_logits: too few values");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), f.logits.size(), f.logits.begin());
    k += f.logits.size();
  }
  if (k != flat.size()) throw std::invalid_argument("set_flat_logits: too many values");
}

double entropy(const ToyPolicy& policy) {
  double h = 0.0;
  for (std::size_t f = 0; f < policy.factors().size(); ++f) h += factor_entropy(policy.probabilities(f));
  return h;
}

double kl(const ToyPolicy& policy, const ToyPolicy& reference) {
  double d = 0.0;
  for (std::size_t f = 0; f < policy.factors().size(); ++f)
    d += factor_kl(policy.probabilities(f), reference.probabilities(f));
  return d;
}

double surrogate(const ToyPolicy& policy, const ToyPolicy& reference, std::span<const BehaviorAction> actions,
                 std::span<const double> advantages, const UpdateConfig& config) {
  check_batch(actions, advantages);
  double pg = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) pg += advantages[i] * policy.log_prob(actions[i]);
  if (!actions.empty()) pg /= static_cast<double>(actions.size());
  return pg + config.entropy_coef * entropy(policy) - config.kl_coef * kl(policy, reference);
}

std::vector<double> surrogate_gradient(const ToyPolicy& policy, const ToyPolicy& reference,
                                       std::span<const BehaviorAction> actions, std::span<const double> advantages,
                                       const UpdateConfig& config, const ToyPolicy* behavior) {
  check_batch(actions, advantages);
  const double temp = policy.temperature();
  if (!(temp > 0)) throw std::invalid_argument("surrogate_gradient: temperature must be positive");
  const std::size_t m = actions.size();

  // Per-sample weight on grad log pi: A_i, or A_i * ratio_i (0 when clipped).
  std::vector<double> weight(advantages.begin(), advantages.end());
  if (behavior != nullptr) {
    for (std::size_t i = 0; i < m; ++i) {
      const double ratio = std::exp(policy.log_prob(actions[i]) - behavior->log_prob(actions[i]));
      if (config.clip) {
        const double eps = *config.clip;
        if ((advantages[i] > 0 && ratio > 1.0 + eps) || (advantages[i] < 0 && ratio < 1.0 - eps)) {
          weight[i] = 0.0;
          continue;
        }
      }
      weight[i] = advantages[i] * ratio;
    }
  }

  std::vector<double> grad;
  for (std::size_t f = 0; f < policy.factors().size(); ++f) {
    const auto& fac = policy.factor(f);
    const auto p = policy.probabilities(f);
    const auto q = reference.probabilities(f);
    const double h = factor_entropy(p);
    const double d = factor_kl(p, q);
    std::vector<double> g(p.size(), 0.0);

    if (m > 0) {
      double wsum = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        g[actions[i].indices()[f]] += weight[i];
        wsum += weight[i];
      }
      for (std::size_t j = 0; j < p.size(); ++j) g[j] = (g[j] - wsum * p[j]) / (static_cast<double>(m) * temp);
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!fac.allowed[j] || p[j] <= 0) {
        g[j] = 0.0;
        continue;
      }
      const double dh = -p[j] * (std::log(p[j]) + h) / temp;
      const double dkl = p[j] * (std::log(p[j] / q[j]) - d) / temp;
      g[j] += config.entropy_coef * dh - config.kl_coef * dkl;
    }
    grad.insert(grad.end(), g.begin(), g.end());
  }
  return grad;
}

ToyPolicy policy_update(const ToyPolicy& policy, const ToyPolicy& reference, std::span<const BehaviorAction> actions,
                        std::span<const double> advantages, const UpdateConfig& config) {
  check_batch(actions, advantages);
  if (!(config.lr > 0)) throw std::invalid_argument("policy_update: learning rate must be positive");
  if (config.epochs < 1) throw std::invalid_argument("policy_update: epochs must be >= 1");
  ToyPolicy current = policy;
  for (int e = 0; e < config.epochs; ++e) {
    const auto g = surrogate_gradient(current, reference, actions, advantages, config, e == 0 ? nullptr : &policy);
    auto theta = current.flat_logits();
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += config.lr * g[k];
    current.set_flat_logits(theta);
  }
  return current;
}

}  // namespace checkrl

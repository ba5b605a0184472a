#pragma once

// Group-relative advantages and the factorized toy policy that stands in for
// an LLM policy. Each behavior feature (answer length bucket, number of
// searches, language, explicit check use) is an independent softmax factor.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "checkrl/rng.hpp"

namespace checkrl {

struct AdvantageVector {
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double epsilon = 1e-6;
};

// A_i = (R_i - mean) / (stddev + epsilon). Throws on empty input or
// non-positive epsilon.
AdvantageVector group_advantages(std::span<const double> rewards, double epsilon = 1e-6);

enum class LengthBucket { UltraShort = 0, Short = 1, Medium = 2, Long = 3 };
enum class Language { English = 0, NonEnglish = 1 };

inline constexpr std::size_t kFactorCount = 4;
namespace factor {
inline constexpr std::size_t kLength = 0;
inline constexpr std::size_t kSearch = 1;
inline constexpr std::size_t kLanguage = 2;
inline constexpr std::size_t kCheck = 3;
}  // namespace factor

// One sampled choice per factor.
struct BehaviorAction {
  LengthBucket length = LengthBucket::Long;
  int searches = 1;  // 0, 1 or 2
  Language language = Language::English;
  bool check = false;

  std::array<std::size_t, kFactorCount> indices() const;
  static BehaviorAction from_indices(const std::array<std::size_t, kFactorCount>& idx);

  friend bool operator==(const BehaviorAction&, const BehaviorAction&) = default;
};

std::string_view to_string(LengthBucket bucket);

struct Factor {
  std::string name;
  std::vector<std::string> labels;
  std::vector<double> logits;
  std::vector<bool> allowed;  // masked entries have probability 0
};

struct UpdateConfig {
  double lr = 0.05;
  double entropy_coef = 0.005;
  double kl_coef = 0.001;
  // PPO clip range for reused samples; nullopt is plain policy gradient.
  std::optional<double> clip;
  int epochs = 1;
};

class ToyPolicy {
 public:
  // Uniform logits, every entry allowed, temperature 1.
  ToyPolicy();

  const std::vector<Factor>& factors() const { return factors_; }
  Factor& factor(std::size_t f) { return factors_.at(f); }
  const Factor& factor(std::size_t f) const { return factors_.at(f); }

  double temperature() const { return temperature_; }
  // Temperature 0 selects the argmax of each factor deterministically.
  void set_temperature(double t);

  void set_logits(std::size_t f, std::vector<double> logits);
  void mask(std::size_t f, std::size_t entry);

  std::vector<double> probabilities(std::size_t f) const;
  double log_prob(const BehaviorAction& action) const;

  BehaviorAction sample(Rng& rng) const;

  // Flattened logits in factor order, for gradient checks and comparisons.
  std::vector<double> flat_logits() const;
  void set_flat_logits(std::span<const double> flat);

 private:
  std::vector<Factor> factors_;
  double temperature_ = 1.0;
};

// Sum over factors of Shannon entropy (nats).
double entropy(const ToyPolicy& policy);
// Sum over factors of KL(policy || reference).
double kl(const ToyPolicy& policy, const ToyPolicy& reference);

// Objective whose gradient the update ascends:
//   (1/M) sum_i A_i log pi(a_i) + c_ent H(pi) - c_kl KL(pi || ref)
double surrogate(const ToyPolicy& policy, const ToyPolicy& reference, std::span<const BehaviorAction> actions,
                 std::span<const double> advantages, const UpdateConfig& config);

// Analytic gradient of `surrogate` with respect to flat_logits(). When
// `behavior` is given, the advantage term uses the PPO clipped ratio against
// it instead of the plain log-probability.
std::vector<double> surrogate_gradient(const ToyPolicy& policy, const ToyPolicy& reference,
                                       std::span<const BehaviorAction> actions, std::span<const double> advantages,
                                       const UpdateConfig& config, const ToyPolicy* behavior = nullptr);

// Gradient ascent on the surrogate for config.epochs passes over the batch.
// Throws std::invalid_argument if actions and advantages differ in length.
ToyPolicy policy_update(const ToyPolicy& policy, const ToyPolicy& reference, std::span<const BehaviorAction> actions,
                        std::span<const double> advantages, const UpdateConfig& config);

}  // namespace checkrl

#pragma once

// GRPO training loop over the simulated world. Per step: draw questions,
// sample a group of behaviors per question, run the rollouts (in parallel),
// normalise rewards within each group and take one policy-gradient step.
// Every random draw comes from a stream keyed by (seed, step, question,
// rollout), so results do not depend on thread count or scheduling.

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include <json.hpp>

#include "checkrl/checker.hpp"
#include "checkrl/diagnostics.hpp"
#include "checkrl/grpo.hpp"
#include "checkrl/scenario.hpp"

namespace checkrl {

struct StepResult {
  StepMetrics metrics;
  ToyPolicy policy;  // the policy that produced this step's samples
};

struct RunResult {
  std::vector<StepMetrics> series;
  // Flat logits after each update; entry t is the policy after step t.
  std::vector<std::vector<double>> trajectory;
  ToyPolicy final_policy;
};

class Trainer {
 public:
  // `checker` replaces the scenario's simulated profile when given.
  explicit Trainer(Scenario scenario, std::shared_ptr<const Checker> checker = nullptr);

  const Scenario& scenario() const { return scenario_; }
  const ToyPolicy& initial_policy() const { return initial_; }

  struct Samples {
    std::vector<BehaviorAction> actions;
    std::vector<RolloutTrace> traces;
  };
  // Behaviors and traces of one step under `policy`, in (question, rollout)
  // order.
  Samples sample_step(int step, const ToyPolicy& policy) const;

  RunResult run(const std::function<void(const StepResult&)>& on_step = {}) const;

 private:
  Scenario scenario_;
  std::shared_ptr<const Checker> checker_;
  KeywordLexicon lexicon_;
  ToyPolicy initial_;
  RolloutConfig rollout_;
};

inline constexpr const char* kRunLogSchema = "checkrl.runlog/1";

nlohmann::ordered_json run_header(const Scenario& scenario);
nlohmann::ordered_json step_record(const StepResult& step);

struct RunLog {
  nlohmann::ordered_json header;
  std::vector<StepMetrics> series;
};

// Throws std::runtime_error on malformed records or a schema mismatch.
RunLog read_run_log(std::istream& in);

// Mean of each metric over the last `window` steps.
StepMetrics end_state(const std::vector<StepMetrics>& series, std::size_t window = 20);

nlohmann::ordered_json metrics_json(const StepMetrics& m);
nlohmann::ordered_json detector_report(const std::vector<StepMetrics>& series);
std::string metrics_csv(const std::vector<StepMetrics>& series);

}  // namespace checkrl

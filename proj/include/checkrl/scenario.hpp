#pragma once

// Scenario files: one JSON document describing the world, checker, policy
// initialisation, training settings and countermeasures of a run. Every
// section is optional; unknown keys anywhere are an error.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "checkrl/checker.hpp"
#include "checkrl/grpo.hpp"
#include "checkrl/sim_env.hpp"
#include "checkrl/triage.hpp"

namespace checkrl {

inline constexpr int kScenarioSchemaVersion = 1;

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

struct QuestionMixEntry {
  FeatureProfile profile;
  double weight = 1.0;
};

struct Countermeasures {
  bool format_penalty = false;
  bool search_bonus = false;
  bool triage_budgets = false;
  bool english_only = false;
};

struct TrainSettings {
  std::size_t questions_per_step = 8;
  std::size_t group_size = 8;
  UpdateConfig update;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct Scenario {
  std::string name = "unnamed";
  std::string description;
  std::uint64_t seed = 1;
  int steps = 200;
  double alpha = 1.0;
  Countermeasures countermeasures;
  CheckerProfile checker = strong_profile();
  WorldConfig world;
  std::vector<QuestionMixEntry> question_mix{{FeatureProfile{}, 1.0}};
  ToyPolicy policy;
  TrainSettings train;
  std::size_t evidence_limit = 768;
  TierBudgets budgets{4, 3, 7};  // used when triage budgets are off
  BudgetTable tier_budgets;
  std::optional<std::filesystem::path> lexicon;  // shipped list when absent
  RewardWeights reward;

  std::vector<std::string> countermeasure_names() const;
};

// Throws ScenarioError listing every unknown key path, or the first type or
// range problem.
Scenario parse_scenario(const nlohmann::json& doc);
// Throws ScenarioError on parse problems and std::ios_base::failure when the
// file cannot be read.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace checkrl

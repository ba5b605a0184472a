#pragma once

// Budgeted multi-turn episode: the agent may search, check a draft, or
// answer. Each action consumes a turn; tool calls within budget hit the
// retriever or checker, over-budget calls only leave a notice. Answering
// triggers an automatic check when check budget remains. Optional triage
// escalation runs after every tool response.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "checkrl/checker.hpp"
#include "checkrl/grpo.hpp"
#include "checkrl/reward.hpp"
#include "checkrl/rng.hpp"
#include "checkrl/sim_env.hpp"
#include "checkrl/triage.hpp"

namespace checkrl {

enum class ActionKind { Search, Check, Answer, Malformed };
std::string_view to_string(ActionKind kind);

struct AgentAction {
  ActionKind kind = ActionKind::Malformed;
  std::string text;  // query, draft or final answer
  // Pre-factored claims for Check/Answer; sentence splitting when absent.
  std::optional<ClaimSet> claims;

  static AgentAction search(std::string query) { return {ActionKind::Search, std::move(query), std::nullopt}; }
  static AgentAction check(std::string draft) { return {ActionKind::Check, std::move(draft), std::nullopt}; }
  static AgentAction answer(std::string final) { return {ActionKind::Answer, std::move(final), std::nullopt}; }
  static AgentAction malformed(std::string raw = {}) { return {ActionKind::Malformed, std::move(raw), std::nullopt}; }
};

// Reads one tagged turn such as "<search>q</search>" or "<answer>a</answer>".
// Anything else, including an unclosed tag, is Malformed.
AgentAction parse_action(std::string_view turn_text);

struct EvidenceBuffer {
  std::vector<Passage> passages;
  std::size_t limit = 768;  // whitespace tokens, source tags included
};

// Passages in retrieval order, one per line as "<source> <text>", cut after
// `limit` tokens.
std::string render_evidence(const EvidenceBuffer& buffer);

class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual RetrievalResult retrieve(const std::string& query, int call, Rng& rng) const = 0;
};

class SimRetriever : public Retriever {
 public:
  SimRetriever(const SyntheticQuestion& question, const WorldConfig& world) : question_(question), world_(world) {}
  RetrievalResult retrieve(const std::string& query, int call, Rng& rng) const override;

 private:
  const SyntheticQuestion& question_;
  const WorldConfig& world_;
};

struct TurnRecord {
  int turn = 0;
  ActionKind kind = ActionKind::Malformed;
  std::string input;
  // "ok", "failure", "empty", "over-budget", "malformed", or a checker error
  // kind for failed checks.
  std::string status;
  std::size_t passages = 0;
  std::vector<Verdict> verdicts;
  bool auto_check = false;
};

struct RolloutState {
  std::vector<TurnRecord> history;
  int n_s = 0;
  int n_c = 0;
  int n_t = 0;
  int searches = 0;  // within-budget search calls, never reset
  int checks = 0;    // within-budget check calls, never reset
  EvidenceBuffer evidence;
  std::optional<PhiCheck> phi;  // from the last successful check
  ClaimSet claims;               // of the last successful check
  std::vector<Verdict> verdicts;
  Tier tier = Tier::Easy;
  TierBudgets budgets;
  std::vector<EscalationEvent> escalations;
  std::optional<std::string> answer;
  bool terminated = false;
  bool auto_checked = false;
  bool over_budget_call = false;
  bool malformed_action = false;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual AgentAction next(const RolloutState& state) = 0;
};

// Replays a fixed list; after the list ends the last action repeats.
class ScriptedAgent : public Agent {
 public:
  explicit ScriptedAgent(std::vector<AgentAction> script);
  AgentAction next(const RolloutState& state) override;

 private:
  std::vector<AgentAction> script_;
  std::size_t pos_ = 0;
};

// Acts out a sampled behavior: the chosen number of searches, an optional
// explicit check of the draft, then the answer. The answer text is realized
// once, when first needed, from the evidence gathered so far.
class BehaviorAgent : public Agent {
 public:
  BehaviorAgent(BehaviorAction plan, const SyntheticQuestion& question, const WorldConfig& world, Rng& rng);
  AgentAction next(const RolloutState& state) override;

 private:
  const RealizedAnswer& draft(const RolloutState& state);

  BehaviorAction plan_;
  const SyntheticQuestion& question_;
  const WorldConfig& world_;
  Rng& rng_;
  int step_ = 0;
  std::optional<RealizedAnswer> draft_;
};

struct Episode {
  std::string id;
  std::vector<std::string> references;
  TriageDecision triage;  // initial tier and budgets
  bool escalation = false;
};

struct RolloutConfig {
  std::size_t evidence_limit = 768;
  AnswerScoring scoring;
  double search_bonus = 0.0;  // added to R once at least one search ran
  BudgetTable table;
  EscalationThresholds thresholds;
};

struct RolloutTrace {
  std::string question_id;
  std::vector<std::string> references;
  Tier initial_tier = Tier::Easy;
  Tier final_tier = Tier::Easy;
  TierSource tier_source = TierSource::Heuristic;
  TierBudgets initial_budgets;
  std::vector<TurnRecord> turns;
  std::optional<std::string> answer;
  ClaimSet claims;
  std::vector<Verdict> verdicts;
  bool phi_set = false;
  std::vector<EscalationEvent> escalations;
  int n_s = 0;
  int n_c = 0;
  int n_t = 0;
  int searches = 0;
  int checks = 0;
  bool auto_checked = false;
  bool budget_exhausted = false;
  bool over_budget_call = false;
  bool malformed_action = false;
  AnswerScoring scoring;
  RewardBreakdown reward;
  double search_bonus = 0.0;
  double final_reward = 0.0;  // reward.total + search_bonus
};

class RolloutEngine {
 public:
  RolloutEngine(const Episode& episode, const Retriever& retriever, const Checker& checker,
                const RolloutConfig& config);

  RolloutState initial_state() const;
  // Applies one action and returns its record, which is also appended to the
  // state's history. Throws std::logic_error once the episode has ended.
  const TurnRecord& apply_action(RolloutState& state, const AgentAction& action, Rng& world_rng,
                                 Rng& checker_rng) const;
  RolloutTrace finish(const RolloutState& state) const;

  RolloutTrace run(Agent& agent, Rng& world_rng, Rng& checker_rng) const;

 private:
  void run_check(RolloutState& state, TurnRecord& rec, const AgentAction& action, Rng& checker_rng) const;
  void escalate(RolloutState& state, const ToolObservation& obs) const;

  const Episode& episode_;
  const Retriever& retriever_;
  const Checker& checker_;
  const RolloutConfig& config_;
};

}  // namespace checkrl

#include "checkrl/rollout.hpp"

#include <algorithm>
#include <stdexcept>

namespace checkrl {

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Search: return "search";
    case ActionKind::Check: return "check";
    case ActionKind::Answer: return "answer";
    case ActionKind::Malformed: return "malformed";
  }
  return "malformed";
}

AgentAction parse_action(std::string_view turn_text) {
  const auto b = turn_text.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return AgentAction::malformed(std::string(turn_text));
  const auto e = turn_text.find_last_not_of(" \t\r\n");
  const auto body = turn_text.substr(b, e - b + 1);
  for (auto [tag, kind] : {std::pair{std::string_view("search"), ActionKind::Search},
                           std::pair{std::string_view("check"), ActionKind::Check},
                           std::pair{std::string_view("answer"), ActionKind::Answer}}) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    if (body.starts_with(open) && body.ends_with(close) && body.size() >= open.size() + close.size()) {
      auto inner = body.substr(open.size(), body.size() - open.size() - close.size());
      if (inner.find('<') != std::string_view::npos) break;
      return AgentAction{kind, std::string(inner), std::nullopt};
    }
  }
  return AgentAction::malformed(std::string(turn_text));
}

std::string render_evidence(const EvidenceBuffer& buffer) {
  std::string out;
  std::size_t budget = buffer.limit;
  for (const auto& p : buffer.passages) {
    if (budget == 0) break;
    const std::string line = truncate_tokens(p.source + " " + p.text, budget);
    std::size_t used = 0;
    bool in = false;
    for (char c : line) {
      if (c == ' ') {
        in = false;
      } else if (!in) {
        in = true;
        ++used;
      }
    }
    if (!out.empty()) out += "\n";
    out += line;
    budget -= std::min(used, budget);
  }
  return out;
}

RetrievalResult SimRetriever::retrieve(const std::string&, int call, Rng& rng) const {
  return stub_retrieve(question_, world_.passages_per_search, rng, world_, call);
}

ScriptedAgent::ScriptedAgent(std::vector<AgentAction> script) : script_(std::move(script)) {
  if (script_.empty()) throw std::invalid_argument("ScriptedAgent: empty script");
}

AgentAction ScriptedAgent::next(const RolloutState&) {
  const auto& a = script_[std::min(pos_, script_.size() - 1)];
  ++pos_;
  return a;
}

BehaviorAgent::BehaviorAgent(BehaviorAction plan, const SyntheticQuestion& question, const WorldConfig& world,
                             Rng& rng)
    : plan_(plan), question_(question), world_(world), rng_(rng) {}

const RealizedAnswer& BehaviorAgent::draft(const RolloutState& state) {
  if (!draft_) draft_ = realize_answer(plan_, question_, !state.evidence.passages.empty(), rng_, world_);
  return *draft_;
}

AgentAction BehaviorAgent::next(const RolloutState& state) {
  const int step = step_++;
  if (step < plan_.searches) return AgentAction::search(question_.id);
  const auto& d = draft(state);
  const bool check_now = plan_.check && step == plan_.searches;
  AgentAction a{check_now ? ActionKind::Check : ActionKind::Answer, d.text, d.claims};
  return a;
}

RolloutEngine::RolloutEngine(const Episode& episode, const Retriever& retriever, const Checker& checker,
                             const RolloutConfig& config)
    : episode_(episode), retriever_(retriever), checker_(checker), config_(config) {}

RolloutState RolloutEngine::initial_state() const {
  RolloutState s;
  s.tier = episode_.triage.tier;
  s.budgets = episode_.triage.budgets;
  s.evidence.limit = config_.evidence_limit;
  return s;
}

void RolloutEngine::escalate(RolloutState& state, const ToolObservation& obs) const {
  if (!episode_.escalation) return;
  auto ev = maybe_escalate(obs, state.tier, state.n_t, config_.thresholds);
  if (!ev) return;
  state.tier = ev->to;
  state.budgets = config_.table[ev->to];
  state.n_s = 0;
  state.n_c = 0;
  state.escalations.push_back(*ev);
}

void RolloutEngine::run_check(RolloutState& state, TurnRecord& rec, const AgentAction& action,
                              Rng& checker_rng) const {
  ++state.n_c;
  ++state.checks;
  ClaimSet claims = action.claims ? *action.claims : extract_claims(action.text);
  ToolObservation obs;
  if (claims.empty()) {
    rec.status = "ok";
    state.claims.clear();
    state.verdicts.clear();
    state.phi = phi_check({}, config_.scoring.verdict_weights);
  } else {
    const auto outcome = checker_.check(episode_.id, claims, render_evidence(state.evidence), checker_rng);
    if (!outcome.ok()) {
      rec.status = std::string(to_string(outcome.error->kind));
      obs.search_failed = true;
    } else {
      rec.status = "ok";
      rec.verdicts = outcome.verdicts;
      state.claims = std::move(claims);
      state.verdicts = outcome.verdicts;
      state.phi = phi_check(state.verdicts, config_.scoring.verdict_weights);
      obs.claims = state.verdicts.size();
      for (const auto& v : state.verdicts) {
        obs.entail += v.label == Label::Entail;
        obs.contradict += v.label == Label::Contradict;
      }
    }
  }
  escalate(state, obs);
}

const TurnRecord& RolloutEngine::apply_action(RolloutState& state, const AgentAction& action, Rng& world_rng,
                                              Rng& checker_rng) const {
  if (state.terminated || state.n_t >= state.budgets.turn) throw std::logic_error("apply_action: episode has ended");
  ++state.n_t;
  TurnRecord rec;
  rec.turn = state.n_t;
  rec.kind = action.kind;
  rec.input = action.text;

  switch (action.kind) {
    case ActionKind::Search: {
      if (state.n_s >= state.budgets.search) {
        rec.status = "over-budget";
        state.over_budget_call = true;
        break;
      }
      ++state.n_s;
      ++state.searches;
      const auto result = retriever_.retrieve(action.text, state.searches, world_rng);
      rec.status = std::string(to_string(result.status));
      rec.passages = result.passages.size();
      ToolObservation obs;
      if (result.status == RetrievalStatus::Failure) obs.search_failed = true;
      if (result.status == RetrievalStatus::Empty || (result.status == RetrievalStatus::Ok && result.passages.empty()))
        obs.search_empty = true;
      state.evidence.passages.insert(state.evidence.passages.end(), result.passages.begin(), result.passages.end());
      escalate(state, obs);
      break;
    }
    case ActionKind::Check: {
      if (state.n_c >= state.budgets.check) {
        rec.status = "over-budget";
        state.over_budget_call = true;
        break;
      }
      run_check(state, rec, action, checker_rng);
      break;
    }
    case ActionKind::Answer: {
      state.answer = action.text;
      state.terminated = true;
      if (state.n_c < state.budgets.check) {
        rec.auto_check = true;
        state.auto_checked = true;
        run_check(state, rec, action, checker_rng);
      } else {
        rec.status = "ok";
      }
      break;
    }
    case ActionKind::Malformed:
      rec.status = "malformed";
      state.malformed_action = true;
      break;
  }
  state.history.push_back(std::move(rec));
  return state.history.back();
}

RolloutTrace RolloutEngine::finish(const RolloutState& state) const {
  RolloutTrace t;
  t.question_id = episode_.id;
  t.references = episode_.references;
  t.initial_tier = episode_.triage.tier;
  t.final_tier = state.tier;
  t.tier_source = episode_.triage.source;
  t.initial_budgets = episode_.triage.budgets;
  t.turns = state.history;
  t.answer = state.answer;
  t.claims = state.claims;
  t.verdicts = state.verdicts;
  t.phi_set = state.phi.has_value();
  t.escalations = state.escalations;
  t.n_s = state.n_s;
  t.n_c = state.n_c;
  t.n_t = state.n_t;
  t.searches = state.searches;
  t.checks = state.checks;
  t.auto_checked = state.auto_checked;
  t.budget_exhausted = !state.answer.has_value();
  t.over_budget_call = state.over_budget_call;
  t.malformed_action = state.malformed_action;
  t.scoring = config_.scoring;
  t.reward = score_answer(state.answer, episode_.references, state.phi, config_.scoring);
  t.search_bonus = state.searches > 0 ? config_.search_bonus : 0.0;
  t.final_reward = t.reward.total + t.search_bonus;
  return t;
}

RolloutTrace RolloutEngine::run(Agent& agent, Rng& world_rng, Rng& checker_rng) const {
  auto state = initial_state();
  while (!state.terminated && state.n_t < state.budgets.turn) apply_action(state, agent.next(state), world_rng, checker_rng);
  return finish(state);
}

}  // namespace checkrl

#include "checkrl/trace_json.hpp"

#include <stdexcept>

namespace checkrl {

namespace {

const ojson& field(const ojson& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw std::runtime_error(std::string("trace: missing field '") + key + "'");
  return j.at(key);
}

ojson budgets_json(const TierBudgets& b) { return ojson{{"search", b.search}, {"check", b.check}, {"turn", b.turn}}; }

TierBudgets budgets_from(const ojson& j) {
  return {field(j, "search").get<int>(), field(j, "check").get<int>(), field(j, "turn").get<int>()};
}

Tier tier_from(const ojson& j) {
  auto t = parse_tier(j.get<std::string>());
  if (!t) throw std::runtime_error("trace: unknown tier " + j.dump());
  return *t;
}

TierSource source_from(const std::string& s) {
  for (auto src : {TierSource::Explicit, TierSource::PriorFaithfulness, TierSource::Heuristic})
    if (to_string(src) == s) return src;
  throw std::runtime_error("trace: unknown tier source " + s);
}

EscalationTrigger trigger_from(const std::string& s) {
  for (auto t : {EscalationTrigger::SearchFailure, EscalationTrigger::EmptyResult,
                 EscalationTrigger::ContradictionRate, EscalationTrigger::LowSupport})
    if (to_string(t) == s) return t;
  throw std::runtime_error("trace: unknown escalation trigger " + s);
}

ActionKind kind_from(const std::string& s) {
  for (auto k : {ActionKind::Search, ActionKind::Check, ActionKind::Answer, ActionKind::Malformed})
    if (to_string(k) == s) return k;
  throw std::runtime_error("trace: unknown action " + s);
}

ojson verdicts_json(const std::vector<Verdict>& vs) {
  ojson arr = ojson::array();
  for (const auto& v : vs) arr.push_back(verdict_to_json(v));
  return arr;
}

std::vector<Verdict> verdicts_from(const ojson& j) {
  std::vector<Verdict> out;
  for (const auto& v : j) out.push_back(verdict_from_json(v));
  return out;
}

}  // namespace

ojson verdict_to_json(const Verdict& v) {
  return ojson{{"label", std::string(to_string(v.label))}, {"confidence", v.confidence}};
}

Verdict verdict_from_json(const ojson& j) {
  const auto label = parse_label(field(j, "label").get<std::string>());
  if (!label) throw std::runtime_error("trace: unknown verdict label " + j.at("label").dump());
  return Verdict{*label, field(j, "confidence").get<double>()};
}

ojson trace_to_json(const RolloutTrace& t) {
  ojson turns = ojson::array();
  for (const auto& r : t.turns) {
    ojson rec{{"turn", r.turn}, {"action", std::string(to_string(r.kind))}, {"input", r.input}, {"status", r.status}};
    if (r.kind == ActionKind::Search) rec["passages"] = r.passages;
    if (r.kind == ActionKind::Check || r.auto_check) rec["verdicts"] = verdicts_json(r.verdicts);
    if (r.kind == ActionKind::Answer) rec["auto_check"] = r.auto_check;
    turns.push_back(std::move(rec));
  }
  ojson claims = ojson::array();
  for (const auto& c : t.claims) claims.push_back(c.text);
  ojson escalations = ojson::array();
  for (const auto& e : t.escalations)
    escalations.push_back({{"trigger", std::string(to_string(e.trigger))},
                           {"from", std::string(to_string(e.from))},
                           {"to", std::string(to_string(e.to))},
                           {"turn", e.turn}});
  const auto& s = t.scoring;
  const auto& r = t.reward;
  return ojson{
      {"schema", kTraceSchemaVersion},
      {"question_id", t.question_id},
      {"references", t.references},
      {"tier",
       {{"initial", std::string(to_string(t.initial_tier))},
        {"final", std::string(to_string(t.final_tier))},
        {"source", std::string(to_string(t.tier_source))}}},
      {"budgets", budgets_json(t.initial_budgets)},
      {"turns", std::move(turns)},
      {"answer", t.answer ? ojson(*t.answer) : ojson(nullptr)},
      {"claims", std::move(claims)},
      {"verdicts", verdicts_json(t.verdicts)},
      {"phi_set", t.phi_set},
      {"escalations", std::move(escalations)},
      {"counters", {{"n_s", t.n_s}, {"n_c", t.n_c}, {"n_t", t.n_t}, {"searches", t.searches}, {"checks", t.checks}}},
      {"flags",
       {{"auto_checked", t.auto_checked},
        {"budget_exhausted", t.budget_exhausted},
        {"over_budget_call", t.over_budget_call},
        {"malformed_action", t.malformed_action},
        {"no_claims", r.no_claims}}},
      {"scoring",
       {{"w_em", s.weights.em},
        {"w_f1", s.weights.f1},
        {"w_fmt", s.weights.fmt},
        {"alpha", s.weights.alpha},
        {"s_entail", s.verdict_weights.entail},
        {"s_neutral", s.verdict_weights.neutral},
        {"s_contradict", s.verdict_weights.contradict},
        {"format_penalty", s.format_penalty_enabled}}},
      {"reward",
       {{"em", r.em},
        {"f1", r.f1},
        {"fmt_score", r.fmt_score},
        {"r_base", r.r_base},
        {"phi_check", r.phi_check},
        {"phi_raw", r.phi_raw},
        {"p_fmt", r.p_fmt},
        {"total", r.total}}},
      {"search_bonus", t.search_bonus},
      {"final_reward", t.final_reward},
  };
}

RolloutTrace trace_from_json(const ojson& j) {
  if (field(j, "schema").get<int>() != kTraceSchemaVersion)
    throw std::runtime_error("trace: schema version " + j.at("schema").dump() + " is not " +
                             std::to_string(kTraceSchemaVersion));
  RolloutTrace t;
  t.question_id = field(j, "question_id").get<std::string>();
  t.references = field(j, "references").get<std::vector<std::string>>();
  const auto& tier = field(j, "tier");
  t.initial_tier = tier_from(field(tier, "initial"));
  t.final_tier = tier_from(field(tier, "final"));
  t.tier_source = source_from(field(tier, "source").get<std::string>());
  t.initial_budgets = budgets_from(field(j, "budgets"));
  for (const auto& r : field(j, "turns")) {
    TurnRecord rec;
    rec.turn = field(r, "turn").get<int>();
    rec.kind = kind_from(field(r, "action").get<std::string>());
    rec.input = field(r, "input").get<std::string>();
    rec.status = field(r, "status").get<std::string>();
    if (r.contains("passages")) rec.passages = r.at("passages").get<std::size_t>();
    if (r.contains("verdicts")) rec.verdicts = verdicts_from(r.at("verdicts"));
    if (r.contains("auto_check")) rec.auto_check = r.at("auto_check").get<bool>();
    t.turns.push_back(std::move(rec));
  }
  if (const auto& a = field(j, "answer"); !a.is_null()) t.answer = a.get<std::string>();
  for (const auto& c : field(j, "claims")) t.claims.push_back(Claim{c.get<std::string>(), {}, 1.0});
  t.verdicts = verdicts_from(field(j, "verdicts"));
  t.phi_set = field(j, "phi_set").get<bool>();
  for (const auto& e : field(j, "escalations"))
    t.escalations.push_back(EscalationEvent{trigger_from(field(e, "trigger").get<std::string>()),
                                            tier_from(field(e, "from")), tier_from(field(e, "to")),
                                            field(e, "turn").get<int>()});
  const auto& c = field(j, "counters");
  t.n_s = field(c, "n_s").get<int>();
  t.n_c = field(c, "n_c").get<int>();
  t.n_t = field(c, "n_t").get<int>();
  t.searches = field(c, "searches").get<int>();
  t.checks = field(c, "checks").get<int>();
  const auto& f = field(j, "flags");
  t.auto_checked = field(f, "auto_checked").get<bool>();
  t.budget_exhausted = field(f, "budget_exhausted").get<bool>();
  t.over_budget_call = field(f, "over_budget_call").get<bool>();
  t.malformed_action = field(f, "malformed_action").get<bool>();
  const auto& s = field(j, "scoring");
  t.scoring.weights.em = field(s, "w_em").get<double>();
  t.scoring.weights.f1 = field(s, "w_f1").get<double>();
  t.scoring.weights.fmt = field(s, "w_fmt").get<double>();
  t.scoring.weights.alpha = field(s, "alpha").get<double>();
  t.scoring.verdict_weights.entail = field(s, "s_entail").get<double>();
  t.scoring.verdict_weights.neutral = field(s, "s_neutral").get<double>();
  t.scoring.verdict_weights.contradict = field(s, "s_contradict").get<double>();
  t.scoring.format_penalty_enabled = field(s, "format_penalty").get<bool>();
  const auto& r = field(j, "reward");
  t.reward.em = field(r, "em").get<int>();
  t.reward.f1 = field(r, "f1").get<double>();
  t.reward.fmt_score = field(r, "fmt_score").get<double>();
  t.reward.r_base = field(r, "r_base").get<double>();
  t.reward.phi_check = field(r, "phi_check").get<double>();
  t.reward.phi_raw = field(r, "phi_raw").get<double>();
  t.reward.p_fmt = field(r, "p_fmt").get<double>();
  t.reward.total = field(r, "total").get<double>();
  t.reward.no_claims = field(f, "no_claims").get<bool>();
  t.search_bonus = field(j, "search_bonus").get<double>();
  t.final_reward = field(j, "final_reward").get<double>();
  return t;
}

std::vector<FieldDiff> replay_trace(const RolloutTrace& t) {
  std::optional<PhiCheck> phi;
  if (t.phi_set) phi = phi_check(t.verdicts, t.scoring.verdict_weights);
  const auto r = score_answer(t.answer, t.references, phi, t.scoring);
  const double final_reward = r.total + t.search_bonus;
  std::vector<FieldDiff> diffs;
  auto cmp = [&](const char* name, double stored, double recomputed) {
    if (stored != recomputed) diffs.push_back({name, stored, recomputed});
  };
  cmp("em", t.reward.em, r.em);
  cmp("f1", t.reward.f1, r.f1);
  cmp("fmt_score", t.reward.fmt_score, r.fmt_score);
  cmp("r_base", t.reward.r_base, r.r_base);
  cmp("phi_check", t.reward.phi_check, r.phi_check);
  cmp("phi_raw", t.reward.phi_raw, r.phi_raw);
  cmp("p_fmt", t.reward.p_fmt, r.p_fmt);
  cmp("total", t.reward.total, r.total);
  cmp("final_reward", t.final_reward, final_reward);
  return diffs;
}

}  // namespace checkrl

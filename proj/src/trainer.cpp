#include "checkrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "checkrl/rng.hpp"

namespace checkrl {

namespace {

using ojson = nlohmann::ordered_json;

std::size_t pick_profile(Rng& rng, const std::vector<QuestionMixEntry>& mix) {
  double total = 0.0;
  for (const auto& e : mix) total += e.weight;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    if (u < mix[i].weight) return i;
    u -= mix[i].weight;
  }
  return mix.size() - 1;
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned t = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (unsigned k = 0; k < t; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (std::size_t i = k; i < n; i += t) fn(i);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

Trainer::Trainer(Scenario scenario, std::shared_ptr<const Checker> checker)
    : scenario_(std::move(scenario)),
      checker_(checker ? std::move(checker) : std::make_shared<SimChecker>(scenario_.checker)),
      lexicon_(scenario_.lexicon ? KeywordLexicon::load(*scenario_.lexicon) : KeywordLexicon::shipped()),
      initial_(scenario_.policy) {
  if (scenario_.countermeasures.english_only)
    initial_.mask(factor::kLanguage, static_cast<std::size_t>(Language::NonEnglish));
  rollout_.evidence_limit = scenario_.evidence_limit;
  rollout_.scoring.format_penalty_enabled = scenario_.countermeasures.format_penalty;
  rollout_.scoring.weights = scenario_.reward;
  rollout_.scoring.weights.alpha = scenario_.alpha;
  rollout_.search_bonus = scenario_.countermeasures.search_bonus ? 0.1 : 0.0;
  rollout_.table = scenario_.tier_budgets;
}

Trainer::Samples Trainer::sample_step(int step, const ToyPolicy& policy) const {
  const auto& sc = scenario_;
  const std::size_t nq = sc.train.questions_per_step;
  const std::size_t ng = sc.train.group_size;
  const auto t = static_cast<std::uint64_t>(step);

  std::vector<SyntheticQuestion> questions;
  std::vector<Episode> episodes;
  for (std::size_t q = 0; q < nq; ++q) {
    Rng qrng = Rng::derive(sc.seed, {stream::kQuestion, t, q});
    const auto& entry = sc.question_mix[pick_profile(qrng, sc.question_mix)];
    questions.push_back(gen_question(qrng, entry.profile, "s" + std::to_string(step) + "q" + std::to_string(q),
                                     sc.world, lexicon_));
  }
  for (const auto& q : questions) {
    Episode ep;
    ep.id = q.id;
    ep.references = q.references;
    if (sc.countermeasures.triage_budgets) {
      ep.triage = resolve_tier(std::nullopt, std::nullopt, q.text, lexicon_, sc.tier_budgets);
      ep.escalation = true;
    } else {
      ep.triage.tier = Tier::Hard;
      ep.triage.source = TierSource::Explicit;
      ep.triage.budgets = sc.budgets;
    }
    episodes.push_back(std::move(ep));
  }

  Samples out;
  out.actions.resize(nq * ng);
  out.traces.resize(nq * ng);
  const unsigned threads = sc.train.threads ? sc.train.threads : std::max(1u, std::thread::hardware_concurrency());
  parallel_for(nq * ng, threads, [&](std::size_t k) {
    const std::size_t q = k / ng;
    const std::size_t i = k % ng;
    Rng prng = Rng::derive(sc.seed, {stream::kPolicy, t, q, i});
    Rng wrng = Rng::derive(sc.seed, {stream::kWorld, t, q, i});
    Rng crng = Rng::derive(sc.seed, {stream::kChecker, t, q, i});
    const auto plan = policy.sample(prng);
    out.actions[k] = plan;
    SimRetriever retriever(questions[q], sc.world);
    BehaviorAgent agent(plan, questions[q], sc.world, wrng);
    RolloutEngine engine(episodes[q], retriever, *checker_, rollout_);
    out.traces[k] = engine.run(agent, wrng, crng);
  });
  return out;
}

RunResult Trainer::run(const std::function<void(const StepResult&)>& on_step) const {
  const auto& sc = scenario_;
  const std::size_t ng = sc.train.group_size;
  RunResult out;
  ToyPolicy policy = initial_;
  for (int step = 0; step < sc.steps; ++step) {
    const auto [actions, traces] = sample_step(step, policy);
    std::vector<double> advantages;
    advantages.reserve(traces.size());
    for (std::size_t q = 0; q < sc.train.questions_per_step; ++q) {
      std::vector<double> rewards;
      for (std::size_t i = 0; i < ng; ++i) rewards.push_back(traces[q * ng + i].final_reward);
      const auto adv = group_advantages(rewards);
      advantages.insert(advantages.end(), adv.values.begin(), adv.values.end());
    }

    StepResult result{compute_metrics(traces, step), policy};
    if (on_step) on_step(result);
    out.series.push_back(result.metrics);
    policy = policy_update(policy, initial_, actions, advantages, sc.train.update);
    out.trajectory.push_back(policy.flat_logits());
  }
  out.final_policy = policy;
  return out;
}

ojson run_header(const Scenario& sc) {
  return ojson{{"record", "header"},
               {"schema", kRunLogSchema},
               {"scenario", sc.name},
               {"seed", sc.seed},
               {"steps", sc.steps},
               {"alpha", sc.alpha},
               {"countermeasures", sc.countermeasure_names()},
               {"checker", sc.checker.name},
               {"evidence_limit", sc.evidence_limit},
               {"questions_per_step", sc.train.questions_per_step},
               {"group_size", sc.train.group_size},
               {"lr", sc.train.update.lr}};
}

ojson metrics_json(const StepMetrics& m) {
  return ojson{{"step", m.step},
               {"samples", m.samples},
               {"mean_length", m.mean_length},
               {"zero_search_fraction", m.zero_search_fraction},
               {"mean_search_calls", m.mean_search_calls},
               {"non_english_fraction", m.non_english_fraction},
               {"mean_phi", m.mean_phi},
               {"support_rate", m.support_rate},
               {"faithfulness", m.faithfulness},
               {"tag_rate", m.tag_rate},
               {"mean_reward", m.mean_reward},
               {"claims", m.claims},
               {"entail", m.entail},
               {"neutral", m.neutral},
               {"contradict", m.contradict}};
}

ojson step_record(const StepResult& r) {
  ojson rec{{"record", "step"}};
  rec.update(metrics_json(r.metrics));
  ojson policy = ojson::object();
  for (std::size_t f = 0; f < r.policy.factors().size(); ++f) {
    const auto& fac = r.policy.factor(f);
    const auto p = r.policy.probabilities(f);
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    double h = 0.0;
    for (double v : p)
      if (v > 0) h -= v * std::log(v);
    policy[fac.name] = {{"argmax", fac.labels[best]}, {"entropy", h}, {"probs", p}, {"logits", fac.logits}};
  }
  rec["policy"] = std::move(policy);
  return rec;
}

RunLog read_run_log(std::istream& in) {
  RunLog log;
  std::string line;
  std::size_t lineno = 0;
  auto num = [&](const ojson& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
      throw std::runtime_error("run log line " + std::to_string(lineno) + ": missing numeric field '" + key + "'");
    return j.at(key).get<double>();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw std::runtime_error("run log line " + std::to_string(lineno) + ": invalid JSON");
    }
    const auto kind = j.value("record", std::string());
    if (lineno == 1) {
      if (kind != "header") throw std::runtime_error("run log: first record is not a header");
      const auto schema = j.value("schema", std::string());
      if (schema != kRunLogSchema)
        throw std::runtime_error("run log: schema '" + schema + "' is not supported (expected '" + kRunLogSchema + "')");
      log.header = j;
      continue;
    }
    if (kind != "step") throw std::runtime_error("run log line " + std::to_string(lineno) + ": unexpected record");
    StepMetrics m;
    m.step = static_cast<int>(num(j, "step"));
    m.samples = static_cast<std::size_t>(num(j, "samples"));
    m.mean_length = num(j, "mean_length");
    m.zero_search_fraction = num(j, "zero_search_fraction");
    m.mean_search_calls = num(j, "mean_search_calls");
    m.non_english_fraction = num(j, "non_english_fraction");
    m.mean_phi = num(j, "mean_phi");
    m.support_rate = num(j, "support_rate");
    m.faithfulness = num(j, "faithfulness");
    m.tag_rate = num(j, "tag_rate");
    m.mean_reward = num(j, "mean_reward");
    m.claims = static_cast<std::size_t>(num(j, "claims"));
    m.entail = static_cast<std::size_t>(num(j, "entail"));
    m.neutral = static_cast<std::size_t>(num(j, "neutral"));
    m.contradict = static_cast<std::size_t>(num(j, "contradict"));
    if (!log.series.empty() && m.step <= log.series.back().step)
      throw std::runtime_error("run log line " + std::to_string(lineno) + ": steps not increasing");
    log.series.push_back(m);
  }
  if (lineno == 0) throw std::runtime_error("run log: empty");
  return log;
}

StepMetrics end_state(const std::vector<StepMetrics>& series, std::size_t window) {
  StepMetrics m;
  if (series.empty()) return m;
  const std::size_t n = std::min(window, series.size());
  const auto first = series.end() - static_cast<std::ptrdiff_t>(n);
  m.step = series.back().step;
  for (auto it = first; it != series.end(); ++it) {
    m.samples += it->samples;
    m.mean_length += it->mean_length;
    m.zero_search_fraction += it->zero_search_fraction;
    m.mean_search_calls += it->mean_search_calls;
    m.non_english_fraction += it->non_english_fraction;
    m.mean_phi += it->mean_phi;
    m.faithfulness += it->faithfulness;
    m.tag_rate += it->tag_rate;
    m.mean_reward += it->mean_reward;
    m.claims += it->claims;
    m.entail += it->entail;
    m.neutral += it->neutral;
    m.contradict += it->contradict;
  }
  const double d = static_cast<double>(n);
  m.mean_length /= d;
  m.zero_search_fraction /= d;
  m.mean_search_calls /= d;
  m.non_english_fraction /= d;
  m.mean_phi /= d;
  m.faithfulness /= d;
  m.tag_rate /= d;
  m.mean_reward /= d;
  m.support_rate = m.claims ? static_cast<double>(m.entail) / static_cast<double>(m.claims) : 0.0;
  return m;
}

ojson detector_report(const std::vector<StepMetrics>& series) {
  const auto collapse = detect_collapse(series);
  const auto cascade = detect_cascade(series);
  auto opt = [](const std::optional<int>& v) { return v ? ojson(*v) : ojson(nullptr); };
  ojson c{{"window", collapse.window},
          {"threshold", collapse.threshold},
          {"enough_data", collapse.enough_data},
          {"collapsed", collapse.collapsed},
          {"first_flagged_step", opt(collapse.first_flagged_step)},
          {"neutral_fraction", collapse.neutral_fraction}};
  ojson k{{"saturation", opt(cascade.saturation)},
          {"length_collapse", opt(cascade.length_collapse)},
          {"search_avoidance", opt(cascade.search_avoidance)},
          {"language_drift", opt(cascade.language_drift)},
          {"onsets", cascade.count()},
          {"ordered", cascade.ordered}};
  return ojson{{"steps", series.size()}, {"collapse", c}, {"cascade", k}, {"end_state", metrics_json(end_state(series))}};
}

std::string metrics_csv(const std::vector<StepMetrics>& series) {
  std::ostringstream out;
  out << "step,samples,mean_length,zero_search_fraction,mean_search_calls,non_english_fraction,mean_phi,"
         "support_rate,faithfulness,tag_rate,mean_reward,claims,entail,neutral,contradict\n";
  out.precision(17);
  for (const auto& m : series)
    out << m.step << ',' << m.samples << ',' << m.mean_length << ',' << m.zero_search_fraction << ','
        << m.mean_search_calls << ',' << m.non_english_fraction << ',' << m.mean_phi << ',' << m.support_rate << ','
        << m.faithfulness << ',' << m.tag_rate << ',' << m.mean_reward << ',' << m.claims << ',' << m.entail << ','
        << m.neutral << ',' << m.contradict << '\n';
  return out.str();
}

}  // namespace checkrl

#include "checkrl/scenario.hpp"

#include <fstream>
#include <map>

namespace checkrl {

namespace {

using json = nlohmann::json;

// Key tree of the scenario schema. Leaves have no children; `items` marks an
// array whose elements are objects of the given shape.
struct Shape {
  std::map<std::string, Shape> keys;
  bool object = false;
  bool items = false;
};

Shape leaf() { return {}; }
Shape obj(std::map<std::string, Shape> keys) { return Shape{std::move(keys), true, false}; }
Shape array_of(std::map<std::string, Shape> keys) { return Shape{std::move(keys), true, true}; }

const Shape& schema() {
  static const Shape s = [] {
    const auto budgets = obj({{"search", leaf()}, {"check", leaf()}, {"turn", leaf()}});
    const auto bucket = obj({{"chars", leaf()}, {"claims", leaf()}, {"f1", leaf()}, {"evidence_gain", leaf()}});
    return obj({
        {"schema", leaf()},
        {"name", leaf()},
        {"description", leaf()},
        {"seed", leaf()},
        {"steps", leaf()},
        {"alpha", leaf()},
        {"countermeasures", leaf()},
        {"checker", obj({{"profile", leaf()},
                         {"neutral_floor", leaf()},
                         {"entail_supported", leaf()},
                         {"contradict_supported", leaf()},
                         {"entail_unsupported", leaf()},
                         {"contradict_unsupported", leaf()},
                         {"confidence", leaf()},
                         {"english_only", leaf()},
                         {"evidence_limit", leaf()}})},
        {"world", obj({{"failure_prob", leaf()},
                       {"empty_prob", leaf()},
                       {"coverage", leaf()},
                       {"passages_per_search", leaf()},
                       {"passage_tokens", leaf()},
                       {"facts_at_end", leaf()},
                       {"alignment", leaf()},
                       {"reference_tokens", leaf()},
                       {"buckets", obj({{"ultra-short", bucket}, {"short", bucket}, {"medium", bucket}, {"long", bucket}})},
                       {"non_english_f1_factor", leaf()},
                       {"question_mix", array_of({{"features", leaf()}, {"weight", leaf()}})}})},
        {"policy", obj({{"temperature", leaf()},
                        {"logits", obj({{"length", leaf()}, {"search", leaf()}, {"language", leaf()}, {"check", leaf()}})}})},
        {"train", obj({{"questions_per_step", leaf()},
                       {"group_size", leaf()},
                       {"lr", leaf()},
                       {"entropy_coef", leaf()},
                       {"kl_coef", leaf()},
                       {"clip", leaf()},
                       {"epochs", leaf()},
                       {"threads", leaf()}})},
        {"rollout", obj({{"evidence_limit", leaf()}, {"budgets", budgets}})},
        {"triage", obj({{"lexicon", leaf()}, {"budgets", obj({{"easy", budgets}, {"medium", budgets}, {"hard", budgets}})}})},
        {"reward", obj({{"w_em", leaf()}, {"w_f1", leaf()}, {"w_fmt", leaf()}})},
    });
  }();
  return s;
}

void collect_unknown(const json& j, const Shape& shape, const std::string& path, std::vector<std::string>& out) {
  if (!shape.object) return;
  if (shape.items) {
    if (!j.is_array()) return;
    for (std::size_t i = 0; i < j.size(); ++i) {
      Shape elem = shape;
      elem.items = false;
      collect_unknown(j[i], elem, path + "[" + std::to_string(i) + "]", out);
    }
    return;
  }
  if (!j.is_object()) return;
  for (const auto& [k, v] : j.items()) {
    const std::string p = path.empty() ? k : path + "." + k;
    auto it = shape.keys.find(k);
    if (it == shape.keys.end())
      out.push_back(p);
    else
      collect_unknown(v, it->second, p, out);
  }
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ScenarioError(path + ": " + msg); }

// Typed accessors: absent keys leave the target untouched.
class Section {
 public:
  Section(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) fail(path_, "expected an object");
  }

  bool has(const char* key) const { return j_ && j_->contains(key); }
  Section sub(const char* key) const { return Section(has(key) ? &j_->at(key) : nullptr, at(key)); }
  const json& raw(const char* key) const { return j_->at(key); }
  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    if (!raw(key).is_number()) fail(at(key), "expected a number");
    out = raw(key).get<double>();
  }
  void probability(const char* key, double& out) const {
    number(key, out);
    if (has(key) && !(out >= 0.0 && out <= 1.0)) fail(at(key), "expected a value in [0,1]");
  }
  template <class Int>
  void integer(const char* key, Int& out, long long lo) const {
    if (!has(key)) return;
    if (!raw(key).is_number_integer()) fail(at(key), "expected an integer");
    const auto v = raw(key).get<long long>();
    if (v < lo) fail(at(key), "must be >= " + std::to_string(lo));
    out = static_cast<Int>(v);
  }
  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    if (!raw(key).is_boolean()) fail(at(key), "expected true or false");
    out = raw(key).get<bool>();
  }
  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    if (!raw(key).is_string()) fail(at(key), "expected a string");
    out = raw(key).get<std::string>();
  }
  std::vector<double> numbers(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_array()) fail(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail(at(key), "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

 private:
  const json* j_;
  std::string path_;
};

TierBudgets parse_budgets(const Section& s, TierBudgets b) {
  s.integer("search", b.search, 0);
  s.integer("check", b.check, 0);
  s.integer("turn", b.turn, 1);
  return b;
}

void parse_checker(const Section& s, CheckerProfile& p) {
  if (s.has("profile")) {
    std::string name;
    s.string("profile", name);
    auto base = profile_by_name(name);
    if (!base) fail(s.at("profile"), "unknown profile '" + name + "' (collapsed, moderate, strong)");
    p = *base;
  }
  s.probability("neutral_floor", p.neutral_floor);
  s.probability("entail_supported", p.entail_supported);
  s.probability("contradict_supported", p.contradict_supported);
  s.probability("entail_unsupported", p.entail_unsupported);
  s.probability("contradict_unsupported", p.contradict_unsupported);
  if (s.has("confidence")) {
    const auto c = s.numbers("confidence");
    if (c.size() != 2) fail(s.at("confidence"), "expected [lo, hi]");
    p.confidence_lo = c[0];
    p.confidence_hi = c[1];
  }
  s.boolean("english_only", p.english_only);
  if (s.has("evidence_limit")) {
    std::size_t lim = 0;
    s.integer("evidence_limit", lim, 1);
    p.evidence_limit = lim;
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    fail("checker", e.what());
  }
}

FeatureProfile parse_features(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of feature names");
  FeatureProfile f;
  for (const auto& x : j) {
    const auto name = x.is_string() ? x.get<std::string>() : std::string();
    if (name == "long") f.long_text = true;
    else if (name == "multihop") f.multihop = true;
    else if (name == "clinical") f.clinical = true;
    else if (name == "multiq") f.multiq = true;
    else if (name == "bullets") f.bullets = true;
    else fail(path, "unknown feature " + x.dump() + " (long, multihop, clinical, multiq, bullets)");
  }
  return f;
}

void parse_world(const Section& s, Scenario& sc) {
  auto& w = sc.world;
  s.probability("failure_prob", w.failure_prob);
  s.probability("empty_prob", w.empty_prob);
  if (s.has("coverage")) w.coverage = s.numbers("coverage");
  s.integer("passages_per_search", w.passages_per_search, 1);
  s.integer("passage_tokens", w.passage_tokens, 0);
  s.boolean("facts_at_end", w.facts_at_end);
  if (s.has("alignment")) {
    const auto a = s.numbers("alignment");
    if (a.size() != 2) fail(s.at("alignment"), "expected [lo, hi]");
    w.alignment_lo = a[0];
    w.alignment_hi = a[1];
  }
  s.integer("reference_tokens", w.reference_tokens, 1);
  const auto buckets = s.sub("buckets");
  const char* names[] = {"ultra-short", "short", "medium", "long"};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto b = buckets.sub(names[i]);
    auto& spec = w.buckets[i];
    if (b.has("chars")) {
      const auto c = b.numbers("chars");
      if (c.size() != 2 || c[0] < 1 || c[1] < c[0]) fail(b.at("chars"), "expected [min, max] with 1 <= min <= max");
      spec.min_chars = static_cast<std::size_t>(c[0]);
      spec.max_chars = static_cast<std::size_t>(c[1]);
    }
    b.integer("claims", spec.claims, 1);
    b.probability("f1", spec.f1);
    b.number("evidence_gain", spec.evidence_gain);
  }
  s.probability("non_english_f1_factor", w.non_english_f1_factor);
  if (s.has("question_mix")) {
    const auto& mix = s.raw("question_mix");
    if (!mix.is_array() || mix.empty()) fail(s.at("question_mix"), "expected a non-empty array");
    sc.question_mix.clear();
    for (std::size_t i = 0; i < mix.size(); ++i) {
      const std::string p = s.at("question_mix") + "[" + std::to_string(i) + "]";
      Section e(&mix[i], p);
      QuestionMixEntry entry;
      if (e.has("features")) entry.profile = parse_features(e.raw("features"), e.at("features"));
      e.number("weight", entry.weight);
      if (!(entry.weight > 0)) fail(e.at("weight"), "must be positive");
      sc.question_mix.push_back(entry);
    }
  }
  try {
    w.validate();
  } catch (const std::invalid_argument& e) {
    fail("world", e.what());
  }
}

void parse_policy(const Section& s, ToyPolicy& policy) {
  if (s.has("temperature")) {
    double t = 1.0;
    s.number("temperature", t);
    if (!(t > 0)) fail(s.at("temperature"), "must be positive");
    policy.set_temperature(t);
  }
  const auto logits = s.sub("logits");
  const char* names[] = {"length", "search", "language", "check"};
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    if (!logits.has(names[f])) continue;
    auto v = logits.numbers(names[f]);
    if (v.size() != policy.factor(f).logits.size())
      fail(logits.at(names[f]), "expected " + std::to_string(policy.factor(f).logits.size()) + " values");
    policy.set_logits(f, std::move(v));
  }
}

void parse_train(const Section& s, TrainSettings& t) {
  s.integer("questions_per_step", t.questions_per_step, 1);
  s.integer("group_size", t.group_size, 2);
  s.number("lr", t.update.lr);
  if (!(t.update.lr > 0)) fail(s.at("lr"), "must be positive");
  s.number("entropy_coef", t.update.entropy_coef);
  s.number("kl_coef", t.update.kl_coef);
  if (s.has("clip") && !s.raw("clip").is_null()) {
    double c = 0.2;
    s.number("clip", c);
    if (!(c > 0)) fail(s.at("clip"), "must be positive");
    t.update.clip = c;
  }
  s.integer("epochs", t.update.epochs, 1);
  s.integer("threads", t.threads, 0);
}

}  // namespace

std::vector<std::string> Scenario::countermeasure_names() const {
  std::vector<std::string> out;
  if (countermeasures.format_penalty) out.emplace_back("format-penalty");
  if (countermeasures.search_bonus) out.emplace_back("search-bonus");
  if (countermeasures.triage_budgets) out.emplace_back("triage-budgets");
  if (countermeasures.english_only) out.emplace_back("english-only");
  return out;
}

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ScenarioError("scenario: top level must be an object");
  std::vector<std::string> unknown;
  collect_unknown(doc, schema(), "", unknown);
  if (!unknown.empty()) {
    std::string msg = "scenario: unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ScenarioError(msg);
  }

  Scenario sc;
  Section top(&doc, "");
  int version = kScenarioSchemaVersion;
  top.integer("schema", version, 0);
  if (version != kScenarioSchemaVersion)
    fail("schema", "version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kScenarioSchemaVersion) + ")");
  top.string("name", sc.name);
  top.string("description", sc.description);
  top.integer("seed", sc.seed, 0);
  top.integer("steps", sc.steps, 1);
  top.number("alpha", sc.alpha);
  if (!(sc.alpha >= 0)) fail("alpha", "must be non-negative");

  if (top.has("countermeasures")) {
    const auto& cm = top.raw("countermeasures");
    if (!cm.is_array()) fail("countermeasures", "expected an array of names");
    for (const auto& x : cm) {
      const auto name = x.is_string() ? x.get<std::string>() : std::string();
      if (name == "format-penalty") sc.countermeasures.format_penalty = true;
      else if (name == "search-bonus") sc.countermeasures.search_bonus = true;
      else if (name == "triage-budgets") sc.countermeasures.triage_budgets = true;
      else if (name == "english-only") sc.countermeasures.english_only = true;
      else
        fail("countermeasures",
             "unknown countermeasure " + x.dump() + " (format-penalty, search-bonus, triage-budgets, english-only)");
    }
  }

  parse_checker(top.sub("checker"), sc.checker);
  parse_world(top.sub("world"), sc);
  parse_policy(top.sub("policy"), sc.policy);
  parse_train(top.sub("train"), sc.train);

  const auto rollout = top.sub("rollout");
  rollout.integer("evidence_limit", sc.evidence_limit, 1);
  sc.budgets = parse_budgets(rollout.sub("budgets"), sc.budgets);

  const auto triage = top.sub("triage");
  if (triage.has("lexicon")) {
    std::string p;
    triage.string("lexicon", p);
    sc.lexicon = p;
  }
  const auto tb = triage.sub("budgets");
  const char* tiers[] = {"easy", "medium", "hard"};
  for (std::size_t i = 0; i < 3; ++i) sc.tier_budgets.by_tier[i] = parse_budgets(tb.sub(tiers[i]), sc.tier_budgets.by_tier[i]);

  const auto reward = top.sub("reward");
  reward.number("w_em", sc.reward.em);
  reward.number("w_f1", sc.reward.f1);
  reward.number("w_fmt", sc.reward.fmt);
  sc.reward.alpha = sc.alpha;
  try {
    sc.reward.validate();
  } catch (const std::invalid_argument& e) {
    fail("reward", e.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot read scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(path.string() + ": invalid JSON: " + e.what());
  }
  auto sc = parse_scenario(doc);
  if (sc.lexicon && sc.lexicon->is_relative()) sc.lexicon = path.parent_path() / *sc.lexicon;
  return sc;
}

}  // namespace checkrl

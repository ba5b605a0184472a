#include "checkrl/sim_env.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace checkrl {

namespace {

// Filler vocabulary grouped by length (2..10 characters). None of these is an
// article, a multihop marker or a shipped clinical keyword.
const std::array<std::vector<std::string>, 11>& filler_by_length() {
  static const std::array<std::vector<std::string>, 11> words = [] {
    std::array<std::vector<std::string>, 11> w;
    w[2] = {"of", "in", "on", "to", "is", "by", "as", "at", "or", "it"};
    w[3] = {"and", "may", "can", "for", "are", "was", "its", "use", "day", "new"};
    w[4] = {"also", "when", "with", "most", "some", "been", "into", "than", "dose", "care"};
    w[5] = {"often", "which", "early", "rates", "later", "blood", "renal", "daily", "adult", "study"};
    w[6] = {"common", "likely", "should", "effect", "normal", "plasma", "review", "weekly", "severe", "record"};
    w[7] = {"usually", "several", "reduced", "however", "patient", "results", "therapy", "factors", "similar",
            "measure"};
    w[8] = {"clinical", "evidence", "response", "moderate", "relevant", "standard", "duration", "reported",
            "observed", "possible"};
    w[9] = {"generally", "treatment", "condition", "recommend", "follow-up", "monitored", "increased", "available",
            "important", "frequency"};
    w[10] = {"management", "associated", "physicians", "guidelines", "indication", "medication", "laboratory",
             "outpatient", "population", "procedures"};
    return w;
  }();
  return words;
}

constexpr std::size_t kMinFiller = 2;
constexpr std::size_t kMaxFiller = 10;

const std::string& random_filler(Rng& rng) {
  const auto& w = filler_by_length();
  const auto len = kMinFiller + rng.index(kMaxFiller - kMinFiller + 1);
  return w[len][rng.index(w[len].size())];
}

const std::string& filler_of_length(Rng& rng, std::size_t len) {
  const auto& w = filler_by_length().at(len);
  return w[rng.index(w.size())];
}

std::size_t pick_weighted(Rng& rng, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding fallback: last entry with positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0) return i;
  return 0;
}

std::string join(const std::vector<std::string>& words, const char* sep = " ") {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += sep;
    out += w;
  }
  return out;
}

void shuffle(std::vector<std::string>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

// Sentence-level filler for question text, free of every trigger feature.
std::string question_filler_sentence(Rng& rng, std::size_t words) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < words; ++i) w.push_back(random_filler(rng));
  w.front()[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w.front()[0])));
  return join(w) + ".";
}

}  // namespace

FeatureProfile FeatureProfile::from_bits(unsigned bits) {
  return {(bits & 1u) != 0, (bits & 2u) != 0, (bits & 4u) != 0, (bits & 8u) != 0, (bits & 16u) != 0};
}

unsigned FeatureProfile::bits() const {
  return (long_text ? 1u : 0u) | (multihop ? 2u : 0u) | (clinical ? 4u : 0u) | (multiq ? 8u : 0u) |
         (bullets ? 16u : 0u);
}

std::size_t WorldConfig::max_claims() const {
  std::size_t m = 0;
  for (const auto& b : buckets) m = std::max(m, b.claims);
  return m;
}

void WorldConfig::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string("world: ") + what + " not in [0,1]");
  };
  prob(failure_prob, "failure_prob");
  prob(empty_prob, "empty_prob");
  prob(alignment_lo, "alignment_lo");
  prob(alignment_hi, "alignment_hi");
  prob(non_english_f1_factor, "non_english_f1_factor");
  if (alignment_lo > alignment_hi) throw std::invalid_argument("world: alignment_lo > alignment_hi");
  if (coverage.empty() || std::any_of(coverage.begin(), coverage.end(), [](double w) { return w < 0; }) ||
      std::accumulate(coverage.begin(), coverage.end(), 0.0) <= 0)
    throw std::invalid_argument("world: coverage weights must be non-negative with positive sum");
  if (passages_per_search == 0) throw std::invalid_argument("world: passages_per_search must be >= 1");
  if (reference_tokens == 0) throw std::invalid_argument("world: reference_tokens must be >= 1");
  std::size_t prev_claims = 0;
  for (const auto& b : buckets) {
    if (b.min_chars == 0 || b.min_chars > b.max_chars) throw std::invalid_argument("world: bad bucket length range");
    if (b.claims == 0 || b.claims < prev_claims)
      throw std::invalid_argument("world: bucket claim counts must be positive and non-decreasing");
    prev_claims = b.claims;
    prob(b.f1, "bucket f1");
    prob(b.f1 + b.evidence_gain, "bucket f1 + evidence_gain");
  }
}

SyntheticQuestion gen_question(Rng& rng, const FeatureProfile& profile, const std::string& tag,
                               const WorldConfig& config, const KeywordLexicon& lexicon) {
  SyntheticQuestion q;
  q.id = tag;
  q.profile = profile;

  std::vector<std::string> parts;
  std::string opener = profile.multihop ? "Why does" : "Does";
  // Clinical terms: three or four distinct ones when requested, at most two
  // otherwise.
  std::vector<std::string> terms(lexicon.clinical.begin(), lexicon.clinical.end());
  shuffle(terms, rng);
  const std::size_t n_terms =
      profile.clinical ? 3 + rng.index(2) : std::min<std::size_t>(rng.index(3), terms.size());
  if (profile.clinical && terms.size() < 3) throw std::invalid_argument("gen_question: lexicon has < 3 terms");
  terms.resize(std::min(n_terms, terms.size()));

  std::string first = opener + " this " + (terms.empty() ? std::string("regimen") : terms.front());
  first += " change the usual course";
  for (std::size_t i = 1; i < terms.size(); ++i) first += (i + 1 == terms.size() ? " or " : ", ") + terms[i];
  first += "?";
  parts.push_back(first);
  if (profile.multiq) parts.push_back("Is " + random_filler(rng) + " monitoring needed?");

  std::string text = join(parts);
  if (profile.bullets) text += "\n- " + random_filler(rng) + " history\n- " + random_filler(rng) + " record";

  auto words_of = [](const std::string& s) {
    std::size_t n = 0;
    bool in = false;
    for (char c : s) {
      const bool sp = c == ' ' || c == '\n' || c == '\t';
      if (sp) in = false;
      else if (!in) { in = true; ++n; }
    }
    return n;
  };
  if (profile.long_text) {
    while (words_of(text) < 125) text += " " + question_filler_sentence(rng, 8);
  } else {
    text += " " + question_filler_sentence(rng, 4 + rng.index(8));
  }
  q.text = text;

  q.core.reserve(config.reference_tokens);
  for (std::size_t i = 0; i < config.reference_tokens; ++i) q.core.push_back("r" + std::to_string(i));
  q.references.push_back(join(q.core));
  for (std::size_t j = 0; j < config.max_claims(); ++j) q.facts.push_back("f" + std::to_string(j));
  q.coverage = std::min(pick_weighted(rng, config.coverage), q.facts.size());
  return q;
}

std::string_view to_string(RetrievalStatus status) {
  switch (status) {
    case RetrievalStatus::Ok: return "ok";
    case RetrievalStatus::Failure: return "failure";
    case RetrievalStatus::Empty: return "empty";
  }
  return "ok";
}

RetrievalResult stub_retrieve(const SyntheticQuestion& question, std::size_t k, Rng& rng, const WorldConfig& config,
                              int call) {
  if (k == 0) throw std::invalid_argument("stub_retrieve: k must be >= 1");
  RetrievalResult r;
  // Both draws always happen so the stream position does not depend on the
  // configured probabilities.
  const bool fail = rng.bernoulli(config.failure_prob);
  const bool empty = rng.bernoulli(config.empty_prob);
  if (fail) {
    r.status = RetrievalStatus::Failure;
    return r;
  }
  if (empty) {
    r.status = RetrievalStatus::Empty;
    return r;
  }
  for (std::size_t p = 0; p < k; ++p) {
    std::vector<std::string> facts;
    for (std::size_t j = p; j < question.coverage; j += k) facts.push_back(question.facts[j]);
    std::vector<std::string> words;
    if (!config.facts_at_end) words = facts;
    for (std::size_t i = 0; i < config.passage_tokens; ++i) words.push_back(random_filler(rng));
    if (config.facts_at_end) words.insert(words.end(), facts.begin(), facts.end());
    r.passages.push_back(
        Passage{"[" + question.id + ":s" + std::to_string(call) + "p" + std::to_string(p) + "]", join(words)});
  }
  return r;
}

RealizedAnswer realize_answer(const BehaviorAction& action, const SyntheticQuestion& question, bool evidence_present,
                              Rng& rng, const WorldConfig& config) {
  const auto& spec = config.bucket(action.length);
  const bool non_en = action.language == Language::NonEnglish;
  const std::size_t target =
      static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(spec.min_chars),
                                           static_cast<std::int64_t>(spec.max_chars)));
  const std::size_t n_claims = std::min(spec.claims, question.facts.size());

  // Reference hits: F1 = 2h / (n_answer + n_ref). n_answer counts the fact,
  // marker and hit tokens and fills the remaining characters with fillers of
  // mean length; a few fixed-point rounds settle h. Stochastic rounding keeps
  // the mean on target.
  double f1 = spec.f1 + (evidence_present ? spec.evidence_gain : 0.0);
  if (non_en) f1 *= config.non_english_f1_factor;
  double fixed_chars = 0.0;
  for (std::size_t j = 0; j < n_claims; ++j)
    fixed_chars += static_cast<double>(question.facts[j].size() + 1) + (non_en ? 5.0 : 0.0);
  double hit_chars = 0.0;
  for (const auto& c : question.core) hit_chars += static_cast<double>(c.size() + 1);
  hit_chars /= static_cast<double>(std::max<std::size_t>(question.core.size(), 1));
  constexpr double kMeanFillerChars = (kMinFiller + kMaxFiller) / 2.0 + 1.0;
  const double fixed_tokens = static_cast<double>(n_claims) * (non_en ? 2.0 : 1.0);
  double h_real = 0.0;
  for (int round = 0; round < 4; ++round) {
    const double rest = std::max(0.0, static_cast<double>(target) - fixed_chars - h_real * hit_chars);
    const double n_est = fixed_tokens + h_real + std::max(rest / kMeanFillerChars, static_cast<double>(n_claims));
    h_real = f1 * (n_est + static_cast<double>(question.core.size())) / 2.0;
  }
  std::size_t hits = static_cast<std::size_t>(std::floor(h_real));
  if (rng.uniform() < h_real - std::floor(h_real)) ++hits;
  hits = std::min(hits, question.core.size());
  std::vector<std::string> core = question.core;
  shuffle(core, rng);
  core.resize(hits);

  struct Sentence {
    std::vector<std::string> words;
    std::vector<std::size_t> filler_slots;
  };
  std::vector<Sentence> sentences(n_claims);
  for (std::size_t j = 0; j < n_claims; ++j) {
    auto& s = sentences[j];
    if (non_en) s.words.emplace_back(kNonEnglishMarker);
    s.words.push_back(question.facts[j]);
  }
  for (std::size_t i = 0; i < core.size(); ++i) sentences[i % n_claims].words.push_back(core[i]);
  for (auto& s : sentences) {
    s.filler_slots.push_back(s.words.size());
    s.words.push_back(random_filler(rng));
    while (s.words.size() < kMinClaimTokens + (non_en ? 1 : 0)) {
      s.filler_slots.push_back(s.words.size());
      s.words.push_back(random_filler(rng));
    }
  }

  auto total_len = [&] {
    std::size_t n = n_claims - 1;  // spaces between sentences
    for (const auto& s : sentences)
      for (const auto& w : s.words) n += w.size() + 1;  // separator or final period
    return n;
  };
  // Over target: drop reference hits from the back.
  while (total_len() > target && !core.empty()) {
    const auto& drop = core.back();
    for (auto& s : sentences) {
      auto it = std::find(s.words.begin(), s.words.end(), drop);
      if (it == s.words.end()) continue;
      const auto pos = static_cast<std::size_t>(it - s.words.begin());
      s.words.erase(it);
      for (auto& slot : s.filler_slots)
        if (slot > pos) --slot;
      break;
    }
    core.pop_back();
  }
  // Under target: add fillers round-robin, then close the last gap exactly.
  std::size_t turn = 0;
  for (;;) {
    const std::size_t len = total_len();
    if (len >= target) break;
    const std::size_t gap = target - len;
    auto& s = sentences[turn % n_claims];
    if (gap >= kMaxFiller + 2) {
      s.filler_slots.push_back(s.words.size());
      s.words.push_back(random_filler(rng));
      ++turn;
      continue;
    }
    if (gap >= kMinFiller + 1) {
      s.filler_slots.push_back(s.words.size());
      s.words.push_back(filler_of_length(rng, gap - 1));
      break;
    }
    // gap of 1 or 2: swap a short filler for one that is `gap` longer.
    bool swapped = false;
    for (auto& sent : sentences) {
      for (auto slot : sent.filler_slots) {
        auto& w = sent.words[slot];
        if (w.size() + gap <= kMaxFiller) {
          w = filler_of_length(rng, w.size() + gap);
          swapped = true;
          break;
        }
      }
      if (swapped) break;
    }
    if (!swapped) {
      s.filler_slots.push_back(s.words.size());
      s.words.push_back(filler_of_length(rng, kMinFiller));
    }
    if (swapped) break;
  }

  RealizedAnswer out;
  for (std::size_t j = 0; j < n_claims; ++j) {
    std::string sentence = join(sentences[j].words) + ".";
    if (!out.text.empty()) out.text += " ";
    out.text += sentence;
    out.claims.push_back(Claim{std::move(sentence), question.facts[j],
                               rng.uniform(config.alignment_lo, config.alignment_hi)});
  }
  return out;
}

}  // namespace checkrl

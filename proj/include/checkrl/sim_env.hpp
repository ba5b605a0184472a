#pragma once

// Synthetic question/evidence world. Questions carry exactly the triage
// features requested; each has a hidden reference answer, a list of fact
// tokens and an evidence coverage count c0 (how many of its facts retrieval
// can surface). Answers are realized from behavior actions as plain text
// whose length, claim count, language marker and reference overlap follow
// the action.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "checkrl/checker.hpp"
#include "checkrl/grpo.hpp"
#include "checkrl/rng.hpp"
#include "checkrl/triage.hpp"

namespace checkrl {

struct FeatureProfile {
  bool long_text = false;
  bool multihop = false;
  bool clinical = false;
  bool multiq = false;
  bool bullets = false;

  // Bit k (0..4) in the order long, multihop, clinical, multiq, bullets.
  static FeatureProfile from_bits(unsigned bits);
  unsigned bits() const;

  friend bool operator==(const FeatureProfile&, const FeatureProfile&) = default;
};

struct BucketSpec {
  std::size_t min_chars = 0;
  std::size_t max_chars = 0;
  std::size_t claims = 1;
  double f1 = 0.2;           // target token F1 without evidence
  double evidence_gain = 0;  // added to the target when evidence was retrieved
};

struct WorldConfig {
  double failure_prob = 0.0;
  double empty_prob = 0.0;
  // Weight of c0 = 0, 1, 2, ...
  std::vector<double> coverage{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
  std::size_t passages_per_search = 3;
  std::size_t passage_tokens = 40;  // filler tokens per passage
  bool facts_at_end = false;
  double alignment_lo = 1.0;
  double alignment_hi = 1.0;
  std::size_t reference_tokens = 20;
  std::array<BucketSpec, 4> buckets{{
      {25, 49, 1, 0.15, 0.0},
      {117, 143, 2, 0.20, 0.02},
      {195, 237, 3, 0.20, 0.04},
      {355, 433, 6, 0.20, 0.06},
  }};
  double non_english_f1_factor = 0.75;

  const BucketSpec& bucket(LengthBucket b) const { return buckets[static_cast<std::size_t>(b)]; }
  std::size_t max_claims() const;
  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

struct SyntheticQuestion {
  std::string id;
  std::string text;
  FeatureProfile profile;
  std::vector<std::string> references;  // one reference answer
  std::vector<std::string> core;        // reference tokens
  std::vector<std::string> facts;       // fact j backs claim j
  std::size_t coverage = 0;             // c0
};

// `tag` becomes the question id and the passage source prefix. Fact and
// reference tokens ("f0", "r0", ...) are short so that brief answers can
// still carry reference hits; filler vocabulary never contains digits.
SyntheticQuestion gen_question(Rng& rng, const FeatureProfile& profile, const std::string& tag,
                               const WorldConfig& config, const KeywordLexicon& lexicon = KeywordLexicon::shipped());

struct Passage {
  std::string source;  // e.g. "[q1:s1p0]"
  std::string text;
};

enum class RetrievalStatus { Ok, Failure, Empty };
std::string_view to_string(RetrievalStatus status);

struct RetrievalResult {
  RetrievalStatus status = RetrievalStatus::Ok;
  std::vector<Passage> passages;
};

// `call` numbers the searches of one episode and only affects source tags.
RetrievalResult stub_retrieve(const SyntheticQuestion& question, std::size_t k, Rng& rng, const WorldConfig& config,
                              int call = 1);

struct RealizedAnswer {
  std::string text;
  ClaimSet claims;
};

RealizedAnswer realize_answer(const BehaviorAction& action, const SyntheticQuestion& question, bool evidence_present,
                              Rng& rng, const WorldConfig& config);

}  // namespace checkrl

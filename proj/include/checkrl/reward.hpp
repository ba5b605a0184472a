#pragma once

// Reward assembly for checker-guided rollouts.
//
//   R = r_base * (1 + alpha * phi_check) + P_fmt
//
// r_base is a renormalised mix of exact match, token F1 and a saturating
// length score; phi_check is the confidence-weighted mean verdict score of
// the answer's claims, clamped to [-1, 1]; P_fmt punishes missing or
// degenerate answers outside the multiplier.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace checkrl {

enum class Label { Entail, Neutral, Contradict };

std::string_view to_string(Label label);
// Accepts the wire spellings "entail" / "neutral" / "contradict".
std::optional<Label> parse_label(std::string_view text);

struct Verdict {
  Label label = Label::Neutral;
  double confidence = 0.0;  // in [0, 1]

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// Per-label score s_k.
struct VerdictWeights {
  double entail = 1.0;
  double neutral = 0.0;
  double contradict = -1.5;

  double of(Label label) const;
};

struct RewardWeights {
  double em = 0.35;
  double f1 = 0.15;
  double fmt = 0.10;
  double alpha = 1.0;

  // Throws std::invalid_argument on negative or all-zero weights.
  void validate() const;
};

struct RewardBreakdown {
  int em = 0;
  double f1 = 0.0;
  double fmt_score = 0.0;
  double r_base = 0.0;
  double phi_check = 0.0;  // clamped
  double phi_raw = 0.0;    // before clamping, for diagnostics
  bool no_claims = false;  // the checker saw no claims; phi forced to 0
  double p_fmt = 0.0;
  double total = 0.0;
};

// SQuAD-style normalisation: lower-case, strip ASCII punctuation, drop the
// articles a/an/the, split on whitespace.
std::vector<std::string> normalize_text(std::string_view text);

// Unicode scalar count of UTF-8 text.
std::size_t char_length(std::string_view text);

// Both throw std::invalid_argument when refs is empty.
int exact_match(std::string_view pred, std::span<const std::string> refs);
double token_f1(std::string_view pred, std::span<const std::string> refs);

// Piecewise length score, saturating at 80 characters. 0 encodes a missing
// answer tag.
double fmt_score(std::size_t len_chars);

double base_reward(int em, double f1, double fmt, const RewardWeights& weights);

struct PhiCheck {
  double value = 0.0;  // clamped to [-1, 1]
  double raw = 0.0;
  bool no_claims = false;
};

// Empty verdict lists yield {0, 0, no_claims = true}.
PhiCheck phi_check(std::span<const Verdict> verdicts, const VerdictWeights& weights = {});

inline constexpr std::size_t kShortAnswerChars = 50;

// -0.5 when the answer tag is missing, -0.3 below 50 characters, else 0.
double format_penalty(const std::optional<std::string>& answer);

// Fills r_base-derived fields and total from em/f1/fmt_score/phi_check/p_fmt.
RewardBreakdown total_reward(RewardBreakdown breakdown, const RewardWeights& weights);

struct AnswerScoring {
  bool format_penalty_enabled = true;
  RewardWeights weights;
  VerdictWeights verdict_weights;
};

// Scores a (possibly missing) final answer against references. `phi` is the
// aggregate of the last check performed, or nullopt when no check ran (phi
// then contributes 0). A missing answer scores EM = F1 = FmtScore = 0.
RewardBreakdown score_answer(const std::optional<std::string>& answer,
                             std::span<const std::string> refs,
                             const std::optional<PhiCheck>& phi,
                             const AnswerScoring& scoring);

}  // namespace checkrl

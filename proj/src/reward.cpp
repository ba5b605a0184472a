#include "checkrl/reward.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace checkrl {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Entail: return "entail";
    case Label::Neutral: return "neutral";
    case Label::Contradict: return "contradict";
  }
  return "neutral";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "entail") return Label::Entail;
  if (text == "neutral") return Label::Neutral;
  if (text == "contradict") return Label::Contradict;
  return std::nullopt;
}

double VerdictWeights::of(Label label) const {
  switch (label) {
    case Label::Entail: return entail;
    case Label::Neutral: return neutral;
    case Label::Contradict: return contradict;
  }
  return neutral;
}

void RewardWeights::validate() const {
  if (em < 0 || f1 < 0 || fmt < 0) throw std::invalid_argument("reward weights must be non-negative");
  if (em + f1 + fmt <= 0) throw std::invalid_argument("at least one reward weight must be positive");
  if (alpha < 0) throw std::invalid_argument("alpha must be non-negative");
}

namespace {

bool is_ascii_punct(unsigned char c) {
  return c < 0x80 && ((c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
                      (c >= 0x7b && c <= 0x7e));
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

void require_refs(std::span<const std::string> refs) {
  if (refs.empty()) throw std::invalid_argument("reference answer list must be non-empty");
}

double f1_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& ref) {
  if (pred.empty() || ref.empty()) return 0.0;
  std::map<std::string_view, int> counts;
  for (const auto& t : ref) ++counts[t];
  int common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::vector<std::string> normalize_text(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && current != "a" && current != "an" && current != "the") tokens.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (is_ascii_punct(c)) {
      continue;
    } else if (c < 0x80) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return tokens;
}

std::size_t char_length(std::string_view text) {
  return static_cast<std::size_t>(
      std::count_if(text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xc0) != 0x80; }));
}

int exact_match(std::string_view pred, std::span<const std::string> refs) {
  require_refs(refs);
  const auto p = normalize_text(pred);
  return std::any_of(refs.begin(), refs.end(), [&](const std::string& r) { return normalize_text(r) == p; }) ? 1 : 0;
}

double token_f1(std::string_view pred, std::span<const std::string> refs) {
  require_refs(refs);
  const auto p = normalize_text(pred);
  double best = 0.0;
  for (const auto& r : refs) best = std::max(best, f1_tokens(p, normalize_text(r)));
  return best;
}

double fmt_score(std::size_t len_chars) {
  if (len_chars == 0) return 0.0;
  if (len_chars < 20) return 0.5;
  if (len_chars < 80) return 0.5 + static_cast<double>(len_chars - 20) / 120.0;
  return 1.0;
}

double base_reward(int em, double f1, double fmt, const RewardWeights& weights) {
  weights.validate();
  const double total = weights.em + weights.f1 + weights.fmt;
  return (weights.em * em + weights.f1 * f1 + weights.fmt * fmt) / total;
}

PhiCheck phi_check(std::span<const Verdict> verdicts, const VerdictWeights& weights) {
  if (verdicts.empty()) return {0.0, 0.0, true};
  double sum = 0.0;
  for (const auto& v : verdicts) sum += weights.of(v.label) * v.confidence;
  const double raw = sum / static_cast<double>(verdicts.size());
  return {std::clamp(raw, -1.0, 1.0), raw, false};
}

double format_penalty(const std::optional<std::string>& answer) {
  if (!answer) return -0.5;
  if (char_length(*answer) < kShortAnswerChars) return -0.3;
  return 0.0;
}

RewardBreakdown total_reward(RewardBreakdown b, const RewardWeights& weights) {
  b.r_base = base_reward(b.em, b.f1, b.fmt_score, weights);
  b.total = b.r_base * (1.0 + weights.alpha * b.phi_check) + b.p_fmt;
  return b;
}

RewardBreakdown score_answer(const std::optional<std::string>& answer, std::span<const std::string> refs,
                             const std::optional<PhiCheck>& phi, const AnswerScoring& scoring) {
  RewardBreakdown b;
  if (answer) {
    b.em = exact_match(*answer, refs);
    b.f1 = token_f1(*answer, refs);
    b.fmt_score = fmt_score(char_length(*answer));
  }
  if (phi) {
    b.phi_check = phi->value;
    b.phi_raw = phi->raw;
    b.no_claims = phi->no_claims;
  }
  b.p_fmt = scoring.format_penalty_enabled ? format_penalty(answer) : 0.0;
  return total_reward(b, scoring.weights);
}

}  // namespace checkrl

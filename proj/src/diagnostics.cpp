#include "checkrl/diagnostics.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace checkrl {

StepMetrics compute_metrics(std::span<const RolloutTrace> traces, int step) {
  if (traces.empty()) throw std::invalid_argument("compute_metrics: empty batch");
  StepMetrics m;
  m.step = step;
  m.samples = traces.size();
  std::size_t faithful = 0;
  std::size_t answered = 0;
  std::size_t zero_search = 0;
  std::size_t non_english = 0;
  double length = 0.0;
  double searches = 0.0;
  double phi = 0.0;
  double reward = 0.0;
  for (const auto& t : traces) {
    bool contradiction = false;
    for (const auto& v : t.verdicts) {
      ++m.claims;
      switch (v.label) {
        case Label::Entail: ++m.entail; break;
        case Label::Neutral: ++m.neutral; break;
        case Label::Contradict:
          ++m.contradict;
          contradiction = true;
          break;
      }
    }
    faithful += !contradiction;
    if (t.answer) {
      ++answered;
      length += static_cast<double>(char_length(*t.answer));
      non_english += is_non_english(*t.answer);
    }
    zero_search += t.searches == 0;
    searches += t.searches;
    phi += t.reward.phi_check;
    reward += t.final_reward;
  }
  const double n = static_cast<double>(traces.size());
  m.mean_length = length / n;
  m.zero_search_fraction = static_cast<double>(zero_search) / n;
  m.mean_search_calls = searches / n;
  m.non_english_fraction = static_cast<double>(non_english) / n;
  m.mean_phi = phi / n;
  m.support_rate = m.claims ? static_cast<double>(m.entail) / static_cast<double>(m.claims) : 0.0;
  m.faithfulness = static_cast<double>(faithful) / n;
  m.tag_rate = static_cast<double>(answered) / n;
  m.mean_reward = reward / n;
  return m;
}

CollapseReport detect_collapse(std::span<const StepMetrics> series, std::size_t window, double threshold) {
  if (window == 0) throw std::invalid_argument("detect_collapse: window must be >= 1");
  CollapseReport r;
  r.window = window;
  r.threshold = threshold;
  if (series.size() < window) return r;
  r.enough_data = true;
  for (std::size_t end = window - 1; end < series.size(); ++end) {
    std::size_t neutral = 0;
    std::size_t claims = 0;
    for (std::size_t k = end + 1 - window; k <= end; ++k) {
      neutral += series[k].neutral;
      claims += series[k].claims;
    }
    if (claims == 0) continue;
    const double frac = static_cast<double>(neutral) / static_cast<double>(claims);
    if (end == window - 1) r.neutral_fraction = frac;
    if (frac >= threshold) {
      r.collapsed = true;
      r.first_flagged_step = series[end].step;
      r.neutral_fraction = frac;
      break;
    }
  }
  return r;
}

std::size_t StageOnsets::count() const {
  return saturation.has_value() + length_collapse.has_value() + search_avoidance.has_value() +
         language_drift.has_value();
}

StageOnsets detect_cascade(std::span<const StepMetrics> series, const CascadeThresholds& th) {
  if (th.window == 0) throw std::invalid_argument("detect_cascade: window must be >= 1");
  StageOnsets out;
  if (series.size() < th.window) return out;
  const std::size_t w = th.window;
  auto windowed = [&](double StepMetrics::*field) {
    std::vector<double> means;
    for (std::size_t end = w - 1; end < series.size(); ++end) {
      double s = 0.0;
      for (std::size_t k = end + 1 - w; k <= end; ++k) s += series[k].*field;
      means.push_back(s / static_cast<double>(w));
    }
    return means;
  };
  auto first = [&](const std::vector<double>& means, const std::function<bool(double)>& pred) -> std::optional<int> {
    for (std::size_t i = 0; i < means.size(); ++i)
      if (pred(means[i])) return series[i + w - 1].step;
    return std::nullopt;
  };

  const auto phi = windowed(&StepMetrics::mean_phi);
  const double peak = *std::max_element(phi.begin(), phi.end());
  if (peak - phi.front() >= th.saturation_min_rise)
    out.saturation = first(phi, [&](double v) { return v >= peak - th.saturation_delta; });
  out.length_collapse = first(windowed(&StepMetrics::mean_length), [&](double v) { return v < th.length_below; });
  out.search_avoidance =
      first(windowed(&StepMetrics::zero_search_fraction), [&](double v) { return v >= th.zero_search_at_least; });
  out.language_drift =
      first(windowed(&StepMetrics::non_english_fraction), [&](double v) { return v >= th.non_english_at_least; });

  std::optional<int> prev;
  for (const auto& onset : {out.saturation, out.length_collapse, out.search_avoidance, out.language_drift}) {
    if (!onset) continue;
    if (prev && *onset < *prev) out.ordered = false;
    prev = onset;
  }
  return out;
}

}  // namespace checkrl

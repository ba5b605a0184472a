#include "checkrl/checker.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace checkrl {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::size_t count_tokens(std::string_view s) {
  std::size_t n = 0;
  bool in = false;
  for (char c : s) {
    if (is_space(c)) {
      in = false;
    } else if (!in) {
      in = true;
      ++n;
    }
  }
  return n;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string("checker profile: ") + what + " not in [0,1]");
}

}  // namespace

ClaimSet extract_claims(std::string_view answer) {
  ClaimSet out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    const auto piece = strip(answer.substr(start, end - start));
    if (count_tokens(piece) >= kMinClaimTokens) out.push_back(Claim{std::string(piece), {}, 1.0});
    start = end;
  };
  for (std::size_t i = 0; i < answer.size(); ++i) {
    const char c = answer[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == answer.size() || is_space(answer[i + 1]))) emit(i + 1);
  }
  if (start < answer.size()) emit(answer.size());
  return out;
}

bool is_non_english(std::string_view text) { return text.find(kNonEnglishMarker) != std::string_view::npos; }

void CheckerProfile::validate() const {
  check_probability(neutral_floor, "neutral_floor");
  check_probability(entail_supported, "entail_supported");
  check_probability(contradict_supported, "contradict_supported");
  check_probability(entail_unsupported, "entail_unsupported");
  check_probability(contradict_unsupported, "contradict_unsupported");
  if (entail_supported + contradict_supported > 1.0 || entail_unsupported + contradict_unsupported > 1.0)
    throw std::invalid_argument("checker profile: entail + contradict exceeds 1");
  if (!(confidence_lo >= 0.0 && confidence_lo <= confidence_hi && confidence_hi <= 1.0))
    throw std::invalid_argument("checker profile: confidence range must satisfy 0 <= lo <= hi <= 1");
}

CheckerProfile collapsed_profile() {
  CheckerProfile p = moderate_profile();
  p.name = "collapsed";
  p.neutral_floor = 0.97;
  return p;
}

CheckerProfile moderate_profile() {
  CheckerProfile p;
  p.name = "moderate";
  p.entail_supported = 0.54;
  p.contradict_supported = 0.03;
  p.entail_unsupported = 0.10;
  p.contradict_unsupported = 0.10;
  p.english_only = false;
  return p;
}

CheckerProfile strong_profile() { return CheckerProfile{}; }

std::optional<CheckerProfile> profile_by_name(std::string_view name) {
  if (name == "collapsed") return collapsed_profile();
  if (name == "moderate") return moderate_profile();
  if (name == "strong") return strong_profile();
  return std::nullopt;
}

std::string truncate_tokens(std::string_view text, std::size_t limit) {
  std::string out;
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < text.size() && n < limit) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    const std::size_t b = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (!out.empty()) out.push_back(' ');
    out.append(text.substr(b, i - b));
    ++n;
  }
  return out;
}

std::vector<Verdict> score_claims(const CheckerProfile& profile, const ClaimSet& claims, std::string_view evidence,
                                  Rng& rng) {
  std::string visible = profile.evidence_limit ? truncate_tokens(evidence, *profile.evidence_limit)
                                               : std::string(strip(evidence));
  std::unordered_set<std::string> tokens;
  {
    std::istringstream in(visible);
    std::string t;
    while (in >> t) tokens.insert(t);
  }

  std::vector<Verdict> out;
  out.reserve(claims.size());
  for (const auto& claim : claims) {
    // Every claim consumes the same draws so verdicts of later claims do not
    // depend on earlier outcomes.
    const double u_floor = rng.uniform();
    const double u_label = rng.uniform();
    const double conf = rng.uniform(profile.confidence_lo, profile.confidence_hi);

    Label label = Label::Neutral;
    const bool blind = visible.empty() || (profile.english_only && is_non_english(claim.text)) ||
                       u_floor < profile.neutral_floor;
    if (!blind) {
      const bool supported = !claim.support_key.empty() && tokens.contains(claim.support_key);
      const double p_entail = (supported ? profile.entail_supported : profile.entail_unsupported) * claim.alignment;
      const double p_contra = supported ? profile.contradict_supported : profile.contradict_unsupported;
      if (u_label < p_entail)
        label = Label::Entail;
      else if (u_label < p_entail + p_contra)
        label = Label::Contradict;
    }
    out.push_back(Verdict{label, conf});
  }
  return out;
}

CheckerProfile truncation_scenario(CheckerProfile profile, std::optional<std::size_t> limit) {
  profile.evidence_limit = limit;
  return profile;
}

std::string_view to_string(CheckErrorKind kind) {
  switch (kind) {
    case CheckErrorKind::Timeout: return "timeout";
    case CheckErrorKind::HttpStatus: return "http-status";
    case CheckErrorKind::Protocol: return "protocol";
    case CheckErrorKind::CountMismatch: return "count-mismatch";
  }
  return "protocol";
}

SimChecker::SimChecker(CheckerProfile profile) : profile_(std::move(profile)) { profile_.validate(); }

CheckOutcome SimChecker::check(const std::string&, const ClaimSet& claims, const std::string& evidence,
                               Rng& rng) const {
  return CheckOutcome{score_claims(profile_, claims, evidence, rng), std::nullopt};
}

}  // namespace checkrl

#pragma once

// Checker abstraction: a claim extractor feeding a 3-way NLI scorer. The
// simulated profiles reproduce the verdict regimes seen in practice
// (collapsed, moderate, strong); the wire client in wire.hpp talks to an
// external service behind the same interface.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "checkrl/reward.hpp"
#include "checkrl/rng.hpp"

namespace checkrl {

// Token that marks a claim as non-English in simulated text.
inline constexpr std::string_view kNonEnglishMarker = "[zh]";

struct Claim {
  std::string text;
  // Fact token the claim asserts; the claim is supported when this token is
  // visible in the evidence. Empty for free-text claims.
  std::string support_key;
  double alignment = 1.0;  // latent agreement with the supporting fact

  friend bool operator==(const Claim&, const Claim&) = default;
};

using ClaimSet = std::vector<Claim>;

enum class ExtractorMode { SentenceSplit, Atomic };

inline constexpr std::size_t kMinClaimTokens = 3;

// Splits on '.', '!' or '?' followed by whitespace or end of text and drops
// fragments shorter than three whitespace tokens.
ClaimSet extract_claims(std::string_view answer);

bool is_non_english(std::string_view text);

struct CheckerProfile {
  std::string name = "strong";
  ExtractorMode extractor = ExtractorMode::Atomic;
  // Probability that a claim is labelled Neutral before any evidence is
  // consulted.
  double neutral_floor = 0.0;
  double entail_supported = 0.86;
  double contradict_supported = 0.03;
  double entail_unsupported = 0.24;
  double contradict_unsupported = 0.36;
  double confidence_lo = 0.7;
  double confidence_hi = 1.0;
  bool english_only = true;
  // The checker reads only this many whitespace tokens of evidence.
  std::optional<std::size_t> evidence_limit;

  // Throws std::invalid_argument when probabilities are out of range.
  void validate() const;
};

CheckerProfile collapsed_profile();
CheckerProfile moderate_profile();
CheckerProfile strong_profile();
// "collapsed", "moderate" or "strong".
std::optional<CheckerProfile> profile_by_name(std::string_view name);

// One verdict per claim. Empty evidence yields all-Neutral; so do
// non-English claims under an english-only profile.
std::vector<Verdict> score_claims(const CheckerProfile& profile, const ClaimSet& claims, std::string_view evidence,
                                  Rng& rng);

// Same profile reading at most `limit` evidence tokens (nullopt: no limit).
CheckerProfile truncation_scenario(CheckerProfile profile, std::optional<std::size_t> limit);

// First `limit` whitespace tokens of text, joined by single spaces.
std::string truncate_tokens(std::string_view text, std::size_t limit);

enum class CheckErrorKind { Timeout, HttpStatus, Protocol, CountMismatch };
std::string_view to_string(CheckErrorKind kind);

struct CheckError {
  CheckErrorKind kind = CheckErrorKind::Protocol;
  std::string message;
};

struct CheckOutcome {
  std::vector<Verdict> verdicts;
  std::optional<CheckError> error;

  bool ok() const { return !error.has_value(); }
};

class Checker {
 public:
  virtual ~Checker() = default;
  // Must be safe to call concurrently. `rng` is owned by the calling rollout.
  virtual CheckOutcome check(const std::string& request_id, const ClaimSet& claims, const std::string& evidence,
                             Rng& rng) const = 0;
};

class SimChecker : public Checker {
 public:
  explicit SimChecker(CheckerProfile profile);
  const CheckerProfile& profile() const { return profile_; }
  CheckOutcome check(const std::string& request_id, const ClaimSet& claims, const std::string& evidence,
                     Rng& rng) const override;

 private:
  CheckerProfile profile_;
};

}  // namespace checkrl

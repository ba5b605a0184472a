#pragma once

// Question difficulty triage: five surface features, a weighted score, three
// tiers with search/check/turn budgets, and online escalation when tool
// responses suggest the question is harder than it looked.

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace checkrl {

enum class Tier { Easy = 0, Medium = 1, Hard = 2 };
std::string_view to_string(Tier tier);
std::optional<Tier> parse_tier(std::string_view text);

struct TierBudgets {
  int search = 0;
  int check = 0;
  int turn = 0;

  friend bool operator==(const TierBudgets&, const TierBudgets&) = default;
};

struct BudgetTable {
  std::array<TierBudgets, 3> by_tier{{{1, 1, 3}, {2, 2, 5}, {4, 3, 7}}};
  const TierBudgets& operator[](Tier t) const { return by_tier[static_cast<std::size_t>(t)]; }
};

struct KeywordLexicon {
  std::set<std::string> clinical;
  std::set<std::string> multihop{"why", "how", "vs", "differential"};

  // One keyword per line, '#' starts a comment. Throws std::runtime_error if
  // the file cannot be read or holds no keywords.
  static KeywordLexicon load(const std::filesystem::path& clinical_file);
  // The shipped list under data/, located at build time.
  static const KeywordLexicon& shipped();
};

struct TriageFeatures {
  bool x_long = false;
  bool x_multihop = false;
  bool x_clinical = false;
  bool x_multiq = false;
  bool x_bullets = false;

  std::size_t words = 0;
  std::size_t chars = 0;
  std::size_t clinical_hits = 0;  // distinct lexicon terms present
  std::size_t question_marks = 0;
  bool bullet_line = false;
};

// Words are whitespace tokens; keyword matching is on lower-cased tokens with
// surrounding punctuation trimmed.
TriageFeatures extract_features(std::string_view question, const KeywordLexicon& lexicon);

double triage_score(const TriageFeatures& f);
Tier assign_tier(double score);

enum class TierSource { Explicit, PriorFaithfulness, Heuristic };
std::string_view to_string(TierSource source);

// Warm-start mapping from a stored faithfulness score to a tier.
struct FaithfulnessTierMap {
  double hard_below = 0.40;
  double medium_below = 0.70;
  Tier map(double faithfulness) const;
};

struct TriageDecision {
  double score = 0.0;
  Tier tier = Tier::Easy;
  TierSource source = TierSource::Heuristic;
  TierBudgets budgets;
};

TriageDecision resolve_tier(std::optional<Tier> explicit_tier, std::optional<double> prior_faithfulness,
                            std::string_view question, const KeywordLexicon& lexicon,
                            const BudgetTable& table = {}, const FaithfulnessTierMap& map = {});

enum class EscalationTrigger { SearchFailure, EmptyResult, ContradictionRate, LowSupport };
std::string_view to_string(EscalationTrigger trigger);

struct EscalationEvent {
  EscalationTrigger trigger = EscalationTrigger::SearchFailure;
  Tier from = Tier::Easy;
  Tier to = Tier::Medium;
  int turn = 0;  // turn index (1-based) of the tool response that fired it
};

struct EscalationThresholds {
  double contradiction_rate = 0.30;  // strictly above fires
  double support_rate = 0.40;        // strictly below fires
};

// What the latest tool response revealed. Verdict counts are those of that
// response only; a search response carries no verdicts.
struct ToolObservation {
  bool search_failed = false;
  bool search_empty = false;
  std::size_t claims = 0;
  std::size_t entail = 0;
  std::size_t contradict = 0;
};

// At most one event per call; none when already at Hard. The first matching
// trigger in declaration order is reported.
std::optional<EscalationEvent> maybe_escalate(const ToolObservation& obs, Tier current, int turn,
                                              const EscalationThresholds& thresholds = {});

}  // namespace checkrl

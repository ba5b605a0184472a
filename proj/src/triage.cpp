#include "checkrl/triage.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "checkrl/reward.hpp"

#ifndef CHECKRL_DATA_DIR
#define CHECKRL_DATA_DIR "data"
#endif

namespace checkrl {

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::Easy: return "easy";
    case Tier::Medium: return "medium";
    case Tier::Hard: return "hard";
  }
  return "easy";
}

std::optional<Tier> parse_tier(std::string_view text) {
  if (text == "easy") return Tier::Easy;
  if (text == "medium") return Tier::Medium;
  if (text == "hard") return Tier::Hard;
  return std::nullopt;
}

std::string_view to_string(TierSource source) {
  switch (source) {
    case TierSource::Explicit: return "explicit";
    case TierSource::PriorFaithfulness: return "prior-faithfulness";
    case TierSource::Heuristic: return "heuristic";
  }
  return "heuristic";
}

std::string_view to_string(EscalationTrigger trigger) {
  switch (trigger) {
    case EscalationTrigger::SearchFailure: return "search-failure";
    case EscalationTrigger::EmptyResult: return "empty-result";
    case EscalationTrigger::ContradictionRate: return "contradiction-rate";
    case EscalationTrigger::LowSupport: return "low-support";
  }
  return "search-failure";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

bool is_word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

// Lower-cased whitespace token with leading and trailing punctuation removed.
std::string keyword_form(std::string_view token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  while (b < e && !is_word_char(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && !is_word_char(static_cast<unsigned char>(token[e - 1]))) --e;
  return lower(token.substr(b, e - b));
}

bool is_bullet_line(std::string_view line) {
  const auto b = line.find_first_not_of(" \t");
  if (b == std::string_view::npos) return false;
  line.remove_prefix(b);
  if (line.starts_with("-") || line.starts_with("*") || line.starts_with("•")) return true;
  std::size_t d = 0;
  while (d < line.size() && line[d] >= '0' && line[d] <= '9') ++d;
  return d > 0 && d < line.size() && line[d] == '.' && (d + 1 == line.size() || line[d + 1] == ' ' || line[d + 1] == '\t');
}

}  // namespace

KeywordLexicon KeywordLexicon::load(const std::filesystem::path& clinical_file) {
  std::ifstream in(clinical_file);
  if (!in) throw std::runtime_error("cannot read lexicon file " + clinical_file.string());
  KeywordLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto term = lower(trim(line));
    if (!term.empty()) lex.clinical.insert(std::move(term));
  }
  if (lex.clinical.empty()) throw std::runtime_error("lexicon file " + clinical_file.string() + " has no keywords");
  return lex;
}

const KeywordLexicon& KeywordLexicon::shipped() {
  static const KeywordLexicon lex = load(std::filesystem::path(CHECKRL_DATA_DIR) / "clinical_keywords.txt");
  return lex;
}

TriageFeatures extract_features(std::string_view question, const KeywordLexicon& lexicon) {
  TriageFeatures f;
  f.chars = char_length(question);
  std::set<std::string> clinical_seen;
  std::istringstream words{std::string(question)};
  std::string tok;
  while (words >> tok) {
    ++f.words;
    const auto kw = keyword_form(tok);
    if (lexicon.multihop.contains(kw)) f.x_multihop = true;
    if (lexicon.clinical.contains(kw)) clinical_seen.insert(kw);
  }
  f.clinical_hits = clinical_seen.size();
  for (char c : question)
    if (c == '?') ++f.question_marks;
  std::istringstream lines{std::string(question)};
  std::string line;
  while (std::getline(lines, line))
    if (is_bullet_line(line)) f.bullet_line = true;

  f.x_long = f.words >= 120 || f.chars >= 700;
  f.x_clinical = f.clinical_hits >= 3;
  f.x_multiq = f.question_marks >= 2;
  f.x_bullets = f.bullet_line;
  return f;
}

double triage_score(const TriageFeatures& f) {
  return 0.30 * f.x_long + 0.20 * f.x_multihop + 0.20 * f.x_clinical + 0.15 * f.x_multiq + 0.15 * f.x_bullets;
}

Tier assign_tier(double score) {
  // Compare with a small tolerance so sums like 0.2 + 0.15 land on the
  // boundary they represent.
  constexpr double tol = 1e-9;
  if (score < 0.35 - tol) return Tier::Easy;
  if (score < 0.65 - tol) return Tier::Medium;
  return Tier::Hard;
}

Tier FaithfulnessTierMap::map(double faithfulness) const {
  if (faithfulness < hard_below) return Tier::Hard;
  if (faithfulness < medium_below) return Tier::Medium;
  return Tier::Easy;
}

TriageDecision resolve_tier(std::optional<Tier> explicit_tier, std::optional<double> prior_faithfulness,
                            std::string_view question, const KeywordLexicon& lexicon, const BudgetTable& table,
                            const FaithfulnessTierMap& map) {
  TriageDecision d;
  if (explicit_tier) {
    d.tier = *explicit_tier;
    d.source = TierSource::Explicit;
  } else if (prior_faithfulness) {
    d.tier = map.map(*prior_faithfulness);
    d.source = TierSource::PriorFaithfulness;
  } else {
    d.score = triage_score(extract_features(question, lexicon));
    d.tier = assign_tier(d.score);
    d.source = TierSource::Heuristic;
  }
  d.budgets = table[d.tier];
  return d;
}

std::optional<EscalationEvent> maybe_escalate(const ToolObservation& obs, Tier current, int turn,
                                              const EscalationThresholds& thresholds) {
  if (current == Tier::Hard) return std::nullopt;
  std::optional<EscalationTrigger> trigger;
  if (obs.search_failed) {
    trigger = EscalationTrigger::SearchFailure;
  } else if (obs.search_empty) {
    trigger = EscalationTrigger::EmptyResult;
  } else if (obs.claims > 0) {
    const double n = static_cast<double>(obs.claims);
    if (static_cast<double>(obs.contradict) / n > thresholds.contradiction_rate)
      trigger = EscalationTrigger::ContradictionRate;
    else if (static_cast<double>(obs.entail) / n < thresholds.support_rate)
      trigger = EscalationTrigger::LowSupport;
  }
  if (!trigger) return std::nullopt;
  return EscalationEvent{*trigger, current, static_cast<Tier>(static_cast<int>(current) + 1), turn};
}

}  // namespace checkrl

#pragma once

// JSON form of rollout traces. Field order is fixed so serialized traces can
// be compared byte for byte.

#include <json.hpp>

#include "checkrl/rollout.hpp"

namespace checkrl {

using ojson = nlohmann::ordered_json;

inline constexpr int kTraceSchemaVersion = 1;

ojson verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const ojson& j);

ojson trace_to_json(const RolloutTrace& trace);
// Throws std::runtime_error on a missing field or a schema version mismatch.
RolloutTrace trace_from_json(const ojson& j);

struct FieldDiff {
  std::string field;
  double stored = 0.0;
  double recomputed = 0.0;
};

// Recomputes the reward breakdown from the stored answer, references,
// verdicts and scoring settings and lists every numeric field that differs.
std::vector<FieldDiff> replay_trace(const RolloutTrace& trace);

}  // namespace checkrl

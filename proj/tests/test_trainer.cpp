#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <sstream>

#include "checkrl/trainer.hpp"

using namespace checkrl;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(CHECKRL_SOURCE_DIR) / "scenarios";

Scenario short_run(const std::string& name, int steps, unsigned threads = 2) {
  auto sc = load_scenario(kScenarios / (name + ".json"));
  sc.steps = steps;
  sc.train.threads = threads;
  return sc;
}

class CountingChecker : public Checker {
 public:
  explicit CountingChecker(Label label) : label_(label) {}
  CheckOutcome check(const std::string&, const ClaimSet& claims, const std::string&, Rng&) const override {
    ++calls;
    return {std::vector<Verdict>(claims.size(), Verdict{label_, 1.0}), std::nullopt};
  }
  mutable std::atomic<int> calls{0};

 private:
  Label label_;
};

std::string log_text(const Scenario& sc, RunResult* result = nullptr) {
  std::ostringstream out;
  out << run_header(sc).dump() << '\n';
  auto r = Trainer(sc).run([&](const StepResult& s) { out << step_record(s).dump() << '\n'; });
  if (result) *result = std::move(r);
  return out.str();
}

}  // namespace

TEST_CASE("a run is reproducible from its seed") {
  const auto sc = short_run("strong-unguarded", 12);
  const auto a = Trainer(sc).run();
  const auto b = Trainer(sc).run();
  CHECK(metrics_csv(a.series) == metrics_csv(b.series));
  CHECK(a.trajectory == b.trajectory);

  auto other = sc;
  other.seed += 1;
  CHECK(Trainer(other).run().trajectory != a.trajectory);
}

TEST_CASE("thread count does not change the trajectory") {
  const auto one = Trainer(short_run("strong-unguarded", 10, 1)).run();
  const auto four = Trainer(short_run("strong-unguarded", 10, 4)).run();
  CHECK(one.trajectory == four.trajectory);
  CHECK(metrics_csv(one.series) == metrics_csv(four.series));
}

TEST_CASE("a fully neutral checker trains like the loop reward alone") {
  const auto c = Trainer(short_run("collapsed", 25)).run();
  const auto l = Trainer(short_run("loop-only", 25)).run();
  CHECK(c.trajectory == l.trajectory);
  for (std::size_t t = 0; t < c.series.size(); ++t) {
    CHECK(c.series[t].mean_reward == l.series[t].mean_reward);
    CHECK(c.series[t].mean_phi == 0.0);
  }
}

TEST_CASE("sample_step covers every question and rollout") {
  const auto sc = short_run("moderate", 1);
  const Trainer trainer(sc);
  const auto s = trainer.sample_step(0, trainer.initial_policy());
  const auto n = sc.train.questions_per_step * sc.train.group_size;
  CHECK(s.actions.size() == n);
  CHECK(s.traces.size() == n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& id = s.traces[k].question_id;
    CHECK(id == "s0q" + std::to_string(k / sc.train.group_size));
  }
}

TEST_CASE("an injected checker replaces the simulated profile") {
  auto sc = short_run("moderate", 3);
  auto checker = std::make_shared<CountingChecker>(Label::Entail);
  const auto r = Trainer(sc, checker).run();
  CHECK(checker->calls > 0);
  for (const auto& m : r.series) {
    CHECK(m.contradict == 0);
    CHECK(m.neutral == 0);
    if (m.claims) CHECK(m.support_rate == 1.0);
  }
}

TEST_CASE("english-only keeps every answer in English") {
  const auto r = Trainer(short_run("strong-english-only", 15)).run();
  for (const auto& m : r.series) CHECK(m.non_english_fraction == 0.0);
}

TEST_CASE("run log round trip") {
  const auto sc = short_run("strong-format-penalty", 6);
  RunResult result;
  std::istringstream in(log_text(sc, &result));
  const auto log = read_run_log(in);
  CHECK(log.header.at("schema") == kRunLogSchema);
  CHECK(log.header.at("scenario") == "strong-format-penalty");
  CHECK(log.header.at("countermeasures") == nlohmann::ordered_json::array({"format-penalty"}));
  CHECK(metrics_csv(log.series) == metrics_csv(result.series));
}

TEST_CASE("malformed run logs are rejected") {
  const auto sc = short_run("moderate", 2);
  const auto good = log_text(sc);
  const auto header = good.substr(0, good.find('\n') + 1);
  const auto first_step = good.substr(header.size(), good.find('\n', header.size()) + 1 - header.size());

  auto fails = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_run_log(in);
    } catch (const std::runtime_error&) {
      return true;
    }
    return false;
  };
  CHECK_FALSE(fails(good));
  CHECK(fails(""));
  CHECK(fails(first_step));
  CHECK(fails(header + first_step + first_step));
  CHECK(fails(header + "{nope\n"));
  auto wrong = header;
  wrong.replace(wrong.find("runlog/1"), 8, "runlog/9");
  CHECK(fails(wrong + first_step));
  auto missing = first_step;
  missing.replace(missing.find("\"mean_length\""), 13, "\"mean_lenght\"");
  CHECK(fails(header + missing));
}

TEST_CASE("end state averages the trailing window") {
  std::vector<StepMetrics> s;
  for (int t = 0; t < 30; ++t) {
    StepMetrics m;
    m.step = t;
    m.mean_length = t;
    m.claims = 10;
    m.entail = t < 25 ? 0 : 10;
    s.push_back(m);
  }
  const auto e = end_state(s, 10);
  CHECK(e.step == 29);
  CHECK(e.mean_length == doctest::Approx(24.5));
  CHECK(e.claims == 100);
  CHECK(e.support_rate == doctest::Approx(0.5));
  CHECK(end_state(s, 100).mean_length == doctest::Approx(14.5));
  CHECK(end_state({}).claims == 0);
}

TEST_CASE("metrics csv has one row per step") {
  const auto r = Trainer(short_run("moderate", 4)).run();
  const auto csv = metrics_csv(r.series);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.rfind("step,samples,mean_length,", 0) == 0);

  const auto report = detector_report(r.series);
  CHECK(report.at("steps") == 4);
  CHECK(report.at("collapse").at("enough_data") == false);
  CHECK(report.at("cascade").at("onsets") == 0);
}

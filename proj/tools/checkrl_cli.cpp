// checkrl: run training scenarios, detect phase transitions in run logs,
// export metrics, replay stored traces and sweep a scenario parameter.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "checkrl/trace_json.hpp"
#include "checkrl/trainer.hpp"
#include "checkrl/wire.hpp"

namespace fs = std::filesystem;
using namespace checkrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiff = 1;
constexpr int kExitSchema = 2;
constexpr int kExitIo = 3;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::shared_ptr<const Checker> endpoint_checker() {
  const char* ep = std::getenv("CHECKER_ENDPOINT");
  if (ep == nullptr || *ep == '\0') return nullptr;
  return std::make_shared<WireClient>(parse_endpoint(ep));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

RunLog load_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read run log " + path.string());
  try {
    return read_run_log(in);
  } catch (const std::runtime_error& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
}

Scenario load(const fs::path& path) {
  try {
    return load_scenario(path);
  } catch (const std::ios_base::failure& e) {
    throw IoError(e.what());
  }
}

// Runs the scenario, writing run.jsonl and report.json into `out`.
nlohmann::ordered_json run_to(const Scenario& sc, const fs::path& out) {
  ensure_dir(out);
  std::ofstream log(out / "run.jsonl", std::ios::binary);
  if (!log) throw IoError("cannot write " + (out / "run.jsonl").string());
  log << run_header(sc).dump() << '\n';
  Trainer trainer(sc, endpoint_checker());
  const auto result = trainer.run([&](const StepResult& r) { log << step_record(r).dump() << '\n'; });
  if (!log.flush()) throw IoError("cannot write " + (out / "run.jsonl").string());
  auto report = detector_report(result.series);
  write_file(out / "report.json", report.dump(2) + "\n");
  return report;
}

std::string opt_str(const nlohmann::ordered_json& v) { return v.is_null() ? "-" : v.dump(); }

void print_summary(const nlohmann::ordered_json& report) {
  const auto& c = report.at("cascade");
  const auto& e = report.at("end_state");
  std::cout << std::fixed << std::setprecision(3) << "onsets: saturation=" << opt_str(c.at("saturation"))
            << " length=" << opt_str(c.at("length_collapse")) << " search=" << opt_str(c.at("search_avoidance"))
            << " language=" << opt_str(c.at("language_drift")) << " ordered=" << c.at("ordered").dump() << "\n"
            << "collapse: " << report.at("collapse").at("collapsed").dump()
            << "  end state: length=" << e.at("mean_length").get<double>()
            << " zero_search=" << e.at("zero_search_fraction").get<double>()
            << " non_english=" << e.at("non_english_fraction").get<double>()
            << " support=" << e.at("support_rate").get<double>() << " reward=" << e.at("mean_reward").get<double>()
            << "\n";
}

void apply_param(Scenario& sc, const std::string& name, double value) {
  if (name == "alpha") {
    if (value < 0) throw ScenarioError("alpha must be non-negative");
    sc.alpha = value;
    sc.reward.alpha = value;
  } else if (name == "evidence_limit") {
    if (value < 1) throw ScenarioError("evidence_limit must be >= 1");
    sc.evidence_limit = static_cast<std::size_t>(value);
  } else if (name == "lr") {
    if (!(value > 0)) throw ScenarioError("lr must be positive");
    sc.train.update.lr = value;
  } else if (name == "seed") {
    sc.seed = static_cast<std::uint64_t>(value);
  } else {
    throw ScenarioError("parameter '" + name + "' cannot be swept (alpha, evidence_limit, lr, seed)");
  }
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ScenarioError("--values: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ScenarioError("--values: no values given");
  return out;
}

std::vector<fs::path> trace_files(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("no such file or directory: " + p.string());
  if (!fs::is_directory(p)) return {p};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(p))
    if (e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_replay(const fs::path& target) {
  std::size_t traces = 0;
  std::size_t diffs = 0;
  for (const auto& file : trace_files(target)) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read " + file.string());
    nlohmann::ordered_json doc;
    try {
      doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error&) {
      throw ScenarioError(file.string() + ": invalid JSON");
    }
    const auto items = doc.is_array() ? doc : nlohmann::ordered_json::array({doc});
    for (std::size_t i = 0; i < items.size(); ++i) {
      RolloutTrace t;
      try {
        t = trace_from_json(items[i]);
      } catch (const std::exception& e) {
        throw ScenarioError(file.string() + "[" + std::to_string(i) + "]: " + e.what());
      }
      ++traces;
      for (const auto& d : replay_trace(t)) {
        ++diffs;
        std::cout << file.filename().string() << "[" << i << "] " << t.question_id << " " << d.field
                  << ": stored " << std::setprecision(17) << d.stored << " recomputed " << d.recomputed << "\n";
      }
    }
  }
  std::cout << "replayed " << traces << " traces, " << diffs << " diffs\n";
  return diffs == 0 ? kExitOk : kExitDiff;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verifier-as-reward RL lab: training scenarios, detectors and trace replay"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::string log_path;
  std::string replay_path;
  std::string param;
  std::string values;

  auto* run = app.add_subcommand("run", "Train on a scenario; writes run.jsonl and report.json");
  run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--steps", steps, "Override the number of steps")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* detect = app.add_subcommand("detect", "Run collapse and cascade detectors on a run log");
  detect->add_option("log", log_path, "run.jsonl")->required();
  detect->add_option("--out", out_dir, "Write the report JSON here instead of stdout");

  auto* exp = app.add_subcommand("export", "Export per-step metrics of a run log as CSV");
  exp->add_option("log", log_path, "run.jsonl")->required();
  exp->add_option("--out", out_dir, "Output directory (metrics.csv)")->required();

  auto* replay = app.add_subcommand("replay", "Recompute rewards of stored traces and report differences");
  replay->add_option("traces", replay_path, "Trace JSON file or directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a scenario once per parameter value");
  sweep->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  sweep->add_option("--param", param, "alpha, evidence_limit, lr or seed")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--seed", seed, "Override the scenario seed");
  sweep->add_option("--steps", steps, "Override the number of steps")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_dir, "Output directory for per-value runs and sweep.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto sc = load(scenario_path);
      if (seed) sc.seed = *seed;
      if (steps) sc.steps = *steps;
      print_summary(run_to(sc, out_dir));
    } else if (detect->parsed()) {
      const auto report = detector_report(load_log(log_path).series);
      if (out_dir.empty()) {
        std::cout << report.dump(2) << "\n";
      } else {
        write_file(out_dir, report.dump(2) + "\n");
      }
    } else if (exp->parsed()) {
      const auto log = load_log(log_path);
      ensure_dir(out_dir);
      write_file(fs::path(out_dir) / "metrics.csv", metrics_csv(log.series));
      std::cout << "wrote " << log.series.size() << " rows to " << (fs::path(out_dir) / "metrics.csv").string() << "\n";
    } else if (replay->parsed()) {
      return cmd_replay(replay_path);
    } else if (sweep->parsed()) {
      const auto base = load(scenario_path);
      const auto vals = parse_values(values);
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      std::cout << std::left << std::setw(16) << param << std::setw(10) << "support" << std::setw(10) << "reward"
                << std::setw(8) << "onsets" << std::setw(10) << "collapsed" << "\n";
      for (double v : vals) {
        auto sc = base;
        if (seed) sc.seed = *seed;
        if (steps) sc.steps = *steps;
        apply_param(sc, param, v);
        std::ostringstream label;
        label << param << "=" << v;
        nlohmann::ordered_json report;
        if (out_dir.empty()) {
          report = detector_report(Trainer(sc, endpoint_checker()).run().series);
        } else {
          report = run_to(sc, fs::path(out_dir) / label.str());
        }
        const auto& e = report.at("end_state");
        rows.push_back({{"param", param},
                        {"value", v},
                        {"support_rate", e.at("support_rate")},
                        {"mean_reward", e.at("mean_reward")},
                        {"cascade", report.at("cascade")},
                        {"collapse", report.at("collapse").at("collapsed")}});
        std::cout << std::left << std::setw(16) << v << std::fixed << std::setprecision(4) << std::setw(10)
                  << e.at("support_rate").get<double>() << std::setw(10) << e.at("mean_reward").get<double>()
                  << std::setw(8) << report.at("cascade").at("onsets").get<int>() << std::setw(10)
                  << report.at("collapse").at("collapsed").dump() << "\n";
        std::cout.unsetf(std::ios::fixed);
      }
      if (!out_dir.empty()) write_file(fs::path(out_dir) / "sweep.json", rows.dump(2) + "\n");
    }
  } catch (const ScenarioError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetbai/allocation.hpp"
#include "hetbai/error.hpp"
#include "hetbai/ingest.hpp"
#include "hetbai/instance_io.hpp"

namespace hetbai::cli {
namespace {

using nlohmann::json;

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("HETBAI_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (*end != '\0') throw Error(std::string("HETBAI_SEED is not an integer: ") + raw);
  return static_cast<std::uint64_t>(v);
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  const ProblemInstance v = load_instance(path);
  const ValidationReport report = validate(v);
  if (report.admissible) {
    out << "admissible: K=" << v.num_arms << " M=" << v.num_clients() << '\n';
    return kExitOk;
  }
  err << (report.structurally_valid ? "inadmissible" : "invalid") << " instance\n";
  for (const auto& msg : report.violations) err << "  " << msg << '\n';
  return kExitDomain;
}

int cmd_solve(const std::string& path, std::ostream& out) {
  const ProblemInstance v = load_instance(path);
  const ValidationReport report = validate(v);
  if (!report.admissible) {
    throw Error("cannot solve: " + report.violations.front());
  }
  const Solution s = solve(v);
  json doc;
  doc["global_vector"] = s.global.entries;
  json classes = json::array();
  for (const auto& cls : s.partition.classes) {
    json c = json::array();
    for (int arm : cls) c.push_back(arm + 1);
    classes.push_back(c);
  }
  doc["classes"] = classes;
  json alloc = json::array();
  for (int m = 0; m < v.num_clients(); ++m) {
    json w = json::array();
    for (std::size_t k = 0; k < v.arm_sets[m].size(); ++k) {
      w.push_back({{"arm", v.arm_sets[m][k] + 1}, {"omega", s.allocation.weights[m][k]}});
    }
    alloc.push_back({{"client", m + 1}, {"weights", w}});
  }
  doc["allocation"] = alloc;
  doc["g_tilde_star"] = s.c_star.g_tilde_star;
  doc["c_star_interval"] = {s.c_star.lower, s.c_star.upper};
  out << doc.dump(2) << '\n';
  return kExitOk;
}

json require_object(const std::string& text, std::vector<std::string>& problems) {
  try {
    json doc = json::parse(text);
    if (!doc.is_object()) problems.push_back("config must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw Error(std::string("sweep config: ") + e.what());
  }
}

}  // namespace

SweepConfig parse_sweep_config(const std::string& text,
                               const std::filesystem::path& base_dir) {
  std::vector<std::string> problems;
  const json doc = require_object(text, problems);
  SweepConfig cfg;
  if (problems.empty()) {
    static const std::vector<std::string> known = {
        "instance", "deltas", "policy", "lambda", "repetitions",
        "base_seed", "workers", "step_cap"};
    for (const auto& [key, _] : doc.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        problems.push_back("unknown field \"" + key + "\"");
      }
    }

    if (!doc.contains("instance")) {
      problems.push_back("missing field \"instance\"");
    } else {
      try {
        const json& inst = doc["instance"];
        if (inst.is_string()) {
          std::filesystem::path p = inst.get<std::string>();
          if (p.is_relative()) p = base_dir / p;
          cfg.instance = load_instance(p);
          cfg.instance_source = p.string();
        } else if (inst.is_object()) {
          cfg.instance = instance_from_json(inst.dump());
          cfg.instance_source = "inline";
        } else {
          problems.push_back("\"instance\" must be a path or an instance object");
        }
      } catch (const Error& e) {
        problems.push_back(std::string("instance: ") + e.what());
      }
    }

    if (!doc.contains("deltas")) {
      problems.push_back("missing field \"deltas\"");
    } else if (!doc["deltas"].is_array() || doc["deltas"].empty()) {
      problems.push_back("\"deltas\" must be a non-empty array");
    } else {
      for (const auto& d : doc["deltas"]) {
        if (!d.is_number()) {
          problems.push_back("every delta must be a number");
          continue;
        }
        const double v = d.get<double>();
        if (!(v > 0.0 && v < 1.0)) {
          std::ostringstream msg;
          msg << "delta " << v << " outside (0, 1)";
          problems.push_back(msg.str());
        }
        cfg.deltas.push_back(v);
      }
    }

    if (doc.contains("policy")) {
      if (!doc["policy"].is_string()) {
        problems.push_back("\"policy\" must be a string");
      } else {
        try {
          cfg.policy = parse_policy(doc["policy"].get<std::string>());
        } catch (const Error& e) {
          problems.push_back(e.what());
        }
      }
    }
    if (doc.contains("lambda")) {
      if (!doc["lambda"].is_number() || !(doc["lambda"].get<double>() > 0.0)) {
        problems.push_back("\"lambda\" must be a number > 0");
      } else {
        cfg.lambda = doc["lambda"].get<double>();
      }
    }
    auto read_int = [&](const char* key, long long min_value, auto& target) {
      if (!doc.contains(key)) return;
      const json& j = doc[key];
      if (!j.is_number_integer() || j.get<long long>() < min_value) {
        problems.push_back(std::string("\"") + key + "\" must be an integer >= " +
                           std::to_string(min_value));
        return;
      }
      target = static_cast<std::remove_reference_t<decltype(target)>>(j.get<long long>());
    };
    read_int("repetitions", 1, cfg.repetitions);
    read_int("base_seed", 0, cfg.base_seed);
    read_int("workers", 1, cfg.workers);
    read_int("step_cap", 1, cfg.step_cap);
  }

  if (!problems.empty()) {
    std::string msg = "invalid sweep config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw Error(msg);
  }
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read sweep config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sweep_config(buf.str(), path.parent_path());
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated best-arm identification with heterogeneous clients", "hetbai"};
  app.require_subcommand(1);

  std::string instance_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check an instance file");
  validate_cmd->add_option("instance", instance_path, "Instance JSON")->required();

  auto* solve_cmd = app.add_subcommand("solve", "Print G(v), the optimal allocation and the c* interval");
  solve_cmd->add_option("instance", instance_path, "Instance JSON")->required();

  double delta = 0.1;
  double lambda = 0.01;
  std::uint64_t seed = 0;
  std::string policy = "het-ts";
  std::int64_t step_cap = kDefaultStepCap;
  auto* run_cmd = app.add_subcommand("run", "Run one episode and print its record");
  run_cmd->add_option("--instance", instance_path, "Instance JSON")->required();
  run_cmd->add_option("--delta", delta, "Confidence level in (0,1)")->required();
  run_cmd->add_option("--lambda", lambda, "Communication parameter > 0")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Episode seed (default: $HETBAI_SEED or 0)");
  run_cmd->add_option("--policy", policy, "het-ts or uniform")
      ->check(CLI::IsMember({"het-ts", "uniform"}));
  run_cmd->add_option("--step-cap", step_cap, "Abort after this many time steps");

  std::string config_path;
  std::string out_path;
  int workers = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep_cmd->add_option("--config", config_path, "Sweep config JSON")->required();
  sweep_cmd->add_option("--out", out_path, "Records CSV")->required();
  sweep_cmd->add_option("--workers", workers, "Parallel workers (overrides config)")
      ->check(CLI::PositiveNumber);

  std::string ratings_path;
  std::size_t min_samples = 10;
  std::string labels_path;
  double range_lo = 0.0;
  double range_hi = 100.0;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build an instance from a ratings CSV");
  ingest_cmd->add_option("--ratings", ratings_path, "CSV with header client,arm,rating")->required();
  ingest_cmd->add_option("--min-samples", min_samples, "Minimum samples per (client, arm)")
      ->check(CLI::PositiveNumber);
  ingest_cmd->add_option("--out", out_path, "Instance JSON to write")->required();
  ingest_cmd->add_option("--labels", labels_path, "Label sidecar (default: labels.json next to --out)");
  ingest_cmd->add_option("--range-lo", range_lo, "Lower end of the normalized scale");
  ingest_cmd->add_option("--range-hi", range_hi, "Upper end of the normalized scale");

  std::string records_path;
  std::string plot_path;
  auto* report_cmd = app.add_subcommand("report", "Summarize a records CSV");
  report_cmd->add_option("--records", records_path, "Records CSV")->required();
  report_cmd->add_option("--out", out_path, "Summary CSV")->required();
  report_cmd->add_option("--plot", plot_path, "Plot table (default: <out>_plot.csv)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(instance_path, out, err);
    if (solve_cmd->parsed()) return cmd_solve(instance_path, out);

    if (run_cmd->parsed()) {
      if (seed_opt->count() == 0) seed = seed_from_env().value_or(0);
      const ProblemInstance v = load_instance(instance_path);
      EpisodeOptions options;
      options.step_cap = step_cap;
      const RunRecord r = run_episode(v, parse_policy(policy), delta, lambda, seed, options);
      out << kRecordsHeader << '\n' << format_record(r) << '\n';
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      SweepConfig cfg = load_sweep_config(config_path);
      if (const auto env = seed_from_env()) cfg.base_seed = *env;
      if (workers > 0) cfg.workers = workers;
      const auto records = sweep(cfg);
      export_records(records, out_path);
      out << "wrote " << records.size() << " records to " << out_path << '\n';
      return kExitOk;
    }

    if (ingest_cmd->parsed()) {
      const ParsedRatings parsed = parse_ratings(ratings_path);
      for (const auto& r : parsed.rejected) {
        err << ratings_path << ":" << r.line << ": rejected: " << r.message << '\n';
      }
      IngestOptions options;
      options.min_samples = min_samples;
      options.normalize_range = {range_lo, range_hi};
      const IngestResult result = build_instance(parsed.table, options);
      save_instance(result.instance, out_path);
      const std::filesystem::path labels =
          labels_path.empty() ? std::filesystem::path(out_path).parent_path() / "labels.json"
                              : std::filesystem::path(labels_path);
      std::ofstream lf(labels);
      if (!lf) throw Error("cannot write " + labels.string());
      lf << labels_to_json(result) << '\n';
      for (const auto& d : result.dropped_clients) {
        err << "dropped client " << d.label << ": " << d.reason << '\n';
      }
      out << "wrote instance K=" << result.instance.num_arms
          << " M=" << result.instance.num_clients() << " to " << out_path << '\n';
      return kExitOk;
    }

    if (report_cmd->parsed()) {
      const auto summary = aggregate(load_records(records_path));
      export_summary(summary, out_path);
      std::filesystem::path plot = plot_path;
      if (plot.empty()) {
        const std::filesystem::path o(out_path);
        plot = o.parent_path() / (o.stem().string() + "_plot.csv");
      }
      export_plot_table(summary, plot);
      out << "wrote " << summary.size() << " summary rows to " << out_path
          << " and " << plot.string() << '\n';
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace hetbai::cli

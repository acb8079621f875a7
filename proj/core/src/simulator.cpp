#include "hetbai/simulator.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "hetbai/allocation.hpp"
#include "hetbai/error.hpp"
#include "hetbai/policy.hpp"
#include "hetbai/rng.hpp"

namespace hetbai {
namespace {

enum Stream : std::uint64_t { kChoiceStream = 0, kRewardStream = 1 };

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text, const char* what) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(std::string("bad ") + what + " value \"" + s + "\"");
  }
  return v;
}

template <typename Int>
Int parse_int(std::string_view text, const char* what) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(std::string("bad ") + what + " value \"" + std::string(text) + "\"");
  }
  return v;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::string_view to_string(Policy policy) noexcept {
  return policy == Policy::kHetTs ? "het-ts" : "uniform";
}

Policy parse_policy(std::string_view text) {
  if (text == "het-ts") return Policy::kHetTs;
  if (text == "uniform") return Policy::kUniform;
  throw Error("unknown policy \"" + std::string(text) + "\" (expected het-ts or uniform)");
}

RunRecord run_episode(const ProblemInstance& instance, Policy policy, double delta,
                      double lambda, std::uint64_t seed,
                      const EpisodeOptions& options) {
  const ValidationReport report = validate(instance);
  if (!report.admissible) {
    throw Error("cannot run on an inadmissible instance: " +
                (report.violations.empty() ? std::string("?") : report.violations.front()));
  }
  const ArmStats truth = arm_stats(instance);
  const CommSchedule schedule(lambda);
  const Server server(instance, delta);
  const int M = instance.num_clients();

  std::vector<ClientState> clients;
  std::vector<Rng> choice_rng;
  std::vector<Rng> reward_rng;
  for (int m = 0; m < M; ++m) {
    clients.emplace_back(m, instance.arm_sets[m]);
    choice_rng.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(m), kChoiceStream));
    reward_rng.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(m), kRewardStream));
  }
  Allocation targets = uniform_allocation(instance);  // G = all-ones

  std::vector<std::vector<double>> means(M);
  std::vector<std::vector<std::int64_t>> counts(M);
  std::size_t position = 1;
  std::int64_t next_instant = schedule.instant(position);

  for (std::int64_t t = 1;; ++t) {
    if (t > options.step_cap) {
      throw StepCapExceeded("episode exceeded the step cap of " +
                            std::to_string(options.step_cap) + " (seed " +
                            std::to_string(seed) + ")");
    }
    for (int m = 0; m < M; ++m) {
      const int arm = policy == Policy::kHetTs
                          ? select_arm(clients[m], t, targets.weights[m], choice_rng[m])
                          : uniform_select(clients[m], choice_rng[m]);
      const double mu = *instance.mean(m, arm);
      clients[m].observe(arm, mu + reward_rng[m].gaussian());
    }
    if (t != next_instant) continue;

    for (int m = 0; m < M; ++m) {
      means[m] = clients[m].empirical_means();
      const auto c = clients[m].counts();
      counts[m].assign(c.begin(), c.end());
    }
    const Server::Decision decision =
        server.on_instant(t, means, counts, policy == Policy::kHetTs);
    if (options.trace) options.trace->push_back({t, decision.z, decision.threshold});
    if (decision.stop) {
      RunRecord record;
      record.policy = policy;
      record.lambda = lambda;
      record.delta = delta;
      record.seed = seed;
      record.tau = t;
      record.rounds = schedule.round_index(t);
      record.recommendation = decision.recommendation;
      record.correct = decision.recommendation == truth.best_arms;
      return record;
    }
    if (policy == Policy::kHetTs) {
      targets = allocation_from_global(decision.global, instance);
    }
    next_instant = schedule.instant(++position);
  }
}

std::vector<RunRecord> sweep(const SweepConfig& config) {
  if (config.repetitions < 1) throw Error("repetitions must be at least 1");
  for (double d : config.deltas) {
    if (!(d > 0.0 && d < 1.0)) throw Error("every delta must lie in (0, 1)");
  }
  const std::size_t reps = static_cast<std::size_t>(config.repetitions);
  const std::size_t total = config.deltas.size() * reps;
  std::vector<RunRecord> records(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (;;) {
      const std::size_t e = next.fetch_add(1);
      if (e >= total) return;
      const double delta = config.deltas[e / reps];
      const std::uint64_t seed = config.base_seed + e;
      try {
        EpisodeOptions options;
        options.step_cap = config.step_cap;
        records[e] = run_episode(config.instance, config.policy, delta,
                                 config.lambda, seed, options);
      } catch (...) {
        errors[e] = std::current_exception();
      }
    }
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(config.workers, total));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (std::size_t e = 0; e < total; ++e) {
    if (!errors[e]) continue;
    try {
      std::rethrow_exception(errors[e]);
    } catch (const std::exception& ex) {
      throw Error("episode " + std::to_string(e) + " (delta=" +
                  format_double(config.deltas[e / reps]) + ", seed=" +
                  std::to_string(config.base_seed + e) + "): " + ex.what());
    }
  }
  return records;
}

std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw Error("cannot aggregate an empty record list");
  using Key = std::tuple<int, double, double>;
  std::map<Key, std::size_t> index;
  std::vector<std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    const Key key{static_cast<int>(r.policy), r.lambda, r.delta};
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto& g : groups) {
    SummaryRow row;
    row.policy = g.front()->policy;
    row.lambda = g.front()->lambda;
    row.delta = g.front()->delta;
    row.n = g.size();
    double sum_tau = 0.0;
    double sum_rounds = 0.0;
    std::size_t wrong = 0;
    for (const auto* r : g) {
      sum_tau += static_cast<double>(r->tau);
      sum_rounds += static_cast<double>(r->rounds);
      wrong += r->correct ? 0 : 1;
    }
    const double n = static_cast<double>(row.n);
    row.mean_tau = sum_tau / n;
    row.mean_rounds = sum_rounds / n;
    row.error_rate = static_cast<double>(wrong) / n;
    if (row.n > 1) {
      double ss = 0.0;
      for (const auto* r : g) {
        const double d = static_cast<double>(r->tau) - row.mean_tau;
        ss += d * d;
      }
      row.std_tau = std::sqrt(ss / (n - 1.0));
    }
    out.push_back(row);
  }
  return out;
}

std::string format_record(const RunRecord& r) {
  std::ostringstream out;
  out << to_string(r.policy) << ',' << format_double(r.lambda) << ','
      << format_double(r.delta) << ',' << r.seed << ',' << r.tau << ','
      << r.rounds << ',' << (r.correct ? 1 : 0) << ',';
  for (std::size_t m = 0; m < r.recommendation.size(); ++m) {
    if (m) out << ';';
    out << r.recommendation[m] + 1;
  }
  return out.str();
}

RunRecord parse_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto fields = split(line, ',');
  if (fields.size() != 8) {
    throw Error("record line must have 8 fields, got " + std::to_string(fields.size()));
  }
  RunRecord r;
  r.policy = parse_policy(fields[0]);
  r.lambda = parse_double(fields[1], "lambda");
  r.delta = parse_double(fields[2], "delta");
  r.seed = parse_int<std::uint64_t>(fields[3], "seed");
  r.tau = parse_int<std::int64_t>(fields[4], "tau");
  r.rounds = parse_int<std::int64_t>(fields[5], "rounds");
  const int correct = parse_int<int>(fields[6], "correct");
  if (correct != 0 && correct != 1) throw Error("correct must be 0 or 1");
  r.correct = correct == 1;
  if (!fields[7].empty()) {
    for (auto arm : split(fields[7], ';')) {
      r.recommendation.push_back(parse_int<int>(arm, "recommendation") - 1);
    }
  }
  return r;
}

void export_records(const std::vector<RunRecord>& records,
                    const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << kRecordsHeader << '\n';
  for (const auto& r : records) out << format_record(r) << '\n';
  finish_write(out, path);
}

std::vector<RunRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read records file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordsHeader) throw Error(path.string() + ": unexpected header");
  std::vector<RunRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void export_summary(const std::vector<SummaryRow>& summary,
                    const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << kSummaryHeader << '\n';
  for (const auto& s : summary) {
    out << to_string(s.policy) << ',' << format_double(s.lambda) << ','
        << format_double(s.delta) << ',' << s.n << ',' << format_double(s.mean_tau)
        << ',' << format_double(s.std_tau) << ',' << format_double(s.mean_rounds)
        << ',' << format_double(s.error_rate) << '\n';
  }
  finish_write(out, path);
}

void export_plot_table(const std::vector<SummaryRow>& summary,
                       const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << kPlotHeader << '\n';
  for (const auto& s : summary) {
    const double log_inv = std::log(1.0 / s.delta);
    const double loglog = log_inv > 0.0 ? std::log(log_inv) : std::nan("");
    out << to_string(s.policy) << ',' << format_double(s.lambda) << ','
        << format_double(s.delta) << ',' << format_double(log_inv) << ','
        << format_double(loglog) << ',' << format_double(s.mean_tau) << ','
        << format_double(s.mean_rounds) << '\n';
  }
  finish_write(out, path);
}

}  // namespace hetbai

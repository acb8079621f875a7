#pragma once

// Seeded episode execution, parameter sweeps and result aggregation.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hetbai/instance.hpp"

namespace hetbai {

enum class Policy { kHetTs, kUniform };

std::string_view to_string(Policy policy) noexcept;
/// Accepts "het-ts" and "uniform".
Policy parse_policy(std::string_view text);

struct RunRecord {
  Policy policy = Policy::kHetTs;
  double lambda = 0.0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::int64_t tau = 0;
  /// Round index of tau: smallest r with ceil((1+lambda)^r) = tau.
  std::int64_t rounds = 0;
  bool correct = false;
  std::vector<int> recommendation;  // 0-based arm per client

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// One server evaluation, recorded when tracing is enabled.
struct InstantLog {
  std::int64_t t = 0;
  double z = 0.0;
  double threshold = 0.0;
};

inline constexpr std::int64_t kDefaultStepCap = 100'000'000;

struct EpisodeOptions {
  std::int64_t step_cap = kDefaultStepCap;
  std::vector<InstantLog>* trace = nullptr;
};

/// Runs one episode with every client pulling once per time step. Random
/// streams: client m draws tie-breaks from derive_seed(seed, m, 0) and
/// rewards from derive_seed(seed, m, 1). Throws hetbai::Error for an
/// inadmissible instance and StepCapExceeded when the cap is hit.
RunRecord run_episode(const ProblemInstance& instance, Policy policy, double delta,
                      double lambda, std::uint64_t seed,
                      const EpisodeOptions& options = {});

struct SweepConfig {
  ProblemInstance instance;
  std::string instance_source;  // informational
  Policy policy = Policy::kHetTs;
  double lambda = 0.01;
  std::vector<double> deltas;
  int repetitions = 4;
  std::uint64_t base_seed = 0;
  int workers = 1;
  std::int64_t step_cap = kDefaultStepCap;
};

/// Episode e = (delta index) * repetitions + repetition uses seed
/// base_seed + e. Records come back in that order whatever the worker
/// count.
std::vector<RunRecord> sweep(const SweepConfig& config);

struct SummaryRow {
  Policy policy = Policy::kHetTs;
  double lambda = 0.0;
  double delta = 0.0;
  std::size_t n = 0;
  double mean_tau = 0.0;
  double std_tau = 0.0;  // sample standard deviation; 0 when n == 1
  double mean_rounds = 0.0;
  double error_rate = 0.0;
};

/// One row per (policy, lambda, delta), in order of first appearance.
std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records);

inline constexpr std::string_view kRecordsHeader =
    "policy,lambda,delta,seed,tau,rounds,correct,recommendation";
inline constexpr std::string_view kSummaryHeader =
    "policy,lambda,delta,n,mean_tau,std_tau,mean_rounds,error_rate";
inline constexpr std::string_view kPlotHeader =
    "policy,lambda,delta,log_inv_delta,loglog_inv_delta,mean_tau,mean_rounds";

/// CSV row for a record (no trailing newline). The recommendation column
/// lists 1-based arms separated by ';'.
std::string format_record(const RunRecord& record);
RunRecord parse_record(std::string_view line);

void export_records(const std::vector<RunRecord>& records,
                    const std::filesystem::path& path);
std::vector<RunRecord> load_records(const std::filesystem::path& path);
void export_summary(const std::vector<SummaryRow>& summary,
                    const std::filesystem::path& path);
/// Plot-ready table: log(1/delta) and log(log(1/delta)) next to mean tau
/// and mean rounds.
void export_plot_table(const std::vector<SummaryRow>& summary,
                       const std::filesystem::path& path);

}  // namespace hetbai

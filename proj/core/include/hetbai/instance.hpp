#pragma once

// Problem instances of the heterogeneous federated best-arm identification
// model: K arms, M clients, client m sees the arm subset S_m and arm i at
// client m yields unit-variance Gaussian rewards with mean mu_{i,m}.
//
// Arms and clients are 0-based everywhere in memory. The JSON form (see
// instance_io.hpp) is 1-based; the mapping is index + 1.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hetbai {

struct ProblemInstance {
  int num_arms = 0;
  /// arm_sets[m] is S_m, sorted ascending.
  std::vector<std::vector<int>> arm_sets;
  /// means[m][k] is the mean of arm arm_sets[m][k] at client m.
  std::vector<std::vector<double>> means;

  int num_clients() const noexcept { return static_cast<int>(arm_sets.size()); }
  /// Position of `arm` inside S_client, if present.
  std::optional<std::size_t> slot(int client, int arm) const;
  std::optional<double> mean(int client, int arm) const;
  /// K' = sum_m |S_m|.
  int total_slots() const noexcept;

  friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;
};

struct ValidationReport {
  bool structurally_valid = true;
  bool admissible = true;
  std::vector<std::string> violations;
};

/// Structural checks plus the unique-best-arm condition. Never throws.
ValidationReport validate(const ProblemInstance& instance);

struct ArmStats {
  std::vector<double> global_means;  // mu_i
  std::vector<int> multiplicities;   // M_i
  std::vector<double> gaps;          // Delta_i
  std::vector<int> best_arms;        // a*_m; smallest index on exact ties
};

/// Throws hetbai::Error when the instance is structurally invalid.
ArmStats arm_stats(const ProblemInstance& instance);

/// True iff every gap is strictly positive.
bool admissible(const ArmStats& stats) noexcept;

struct ArmPartition {
  std::vector<std::vector<int>> classes;  // ascending by smallest member
  std::vector<int> class_of;              // arm -> class index

  int num_classes() const noexcept { return static_cast<int>(classes.size()); }
};

/// Connected components of the co-residence graph (union-find).
ArmPartition partition_arms(const ProblemInstance& instance);

/// Ordered (best arm, other arm) pairs, sorted and deduplicated.
using ArmPair = std::pair<int, int>;
struct ConfusionPairs {
  std::vector<ArmPair> pairs;
};

/// Throws hetbai::Error when `stats` describes an inadmissible instance.
ConfusionPairs confusion_pairs(const ProblemInstance& instance,
                               const ArmStats& stats);

/// Cyclic windows: S_m = {m, m+1, ..., m+width-1} mod K, with means drawn
/// uniformly from [K+2-i, K+3-i] for the 1-based arm index i. With K=M=5
/// the interval is [7-i, 8-i].
ProblemInstance gen_cyclic_instance(int num_arms, int num_clients, int width,
                                    std::uint64_t seed);

/// The four K=M=5 overlap layouts (pattern 1: pairs ... pattern 4: all
/// arms everywhere); pattern p is the cyclic layout of width p+1.
ProblemInstance gen_overlap_instance(int pattern, std::uint64_t seed);

/// mu_{i,m} = i / sqrt(rho) with 1-based arm index i, on the given layout.
ProblemInstance gen_hardness_instance(double rho, int num_arms,
                                      const std::vector<std::vector<int>>& arm_sets);

}  // namespace hetbai

#include "hetbai/instance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hetbai/error.hpp"
#include "hetbai/rng.hpp"

namespace hetbai {
namespace {

std::vector<std::string> structural_violations(const ProblemInstance& v) {
  std::vector<std::string> out;
  if (v.num_arms < 1) out.push_back("K must be positive");
  if (v.arm_sets.empty()) out.push_back("M must be positive");
  if (v.means.size() != v.arm_sets.size()) {
    out.push_back("means must have one row per client");
    return out;
  }
  std::vector<bool> covered(std::max(v.num_arms, 0), false);
  for (int m = 0; m < v.num_clients(); ++m) {
    const auto& s = v.arm_sets[m];
    const std::string client = "client " + std::to_string(m + 1);
    if (s.size() < 2) out.push_back("|S_" + std::to_string(m + 1) + "| < 2");
    if (!std::is_sorted(s.begin(), s.end()) ||
        std::adjacent_find(s.begin(), s.end()) != s.end()) {
      out.push_back(client + ": arm set must be sorted without duplicates");
    }
    for (int arm : s) {
      if (arm < 0 || arm >= v.num_arms) {
        out.push_back(client + ": arm " + std::to_string(arm + 1) +
                      " outside [1, K]");
      } else {
        covered[arm] = true;
      }
    }
    if (v.means[m].size() != s.size()) {
      out.push_back(client + ": expected one mean per accessible arm");
    }
    for (double mu : v.means[m]) {
      if (!std::isfinite(mu)) out.push_back(client + ": non-finite mean");
    }
  }
  for (int i = 0; i < v.num_arms; ++i) {
    if (!covered[i]) {
      out.push_back("arm " + std::to_string(i + 1) + " is owned by no client");
    }
  }
  return out;
}

// Union-find with path compression (halving) and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

}  // namespace

std::optional<std::size_t> ProblemInstance::slot(int client, int arm) const {
  if (client < 0 || client >= num_clients()) return std::nullopt;
  const auto& s = arm_sets[client];
  const auto it = std::lower_bound(s.begin(), s.end(), arm);
  if (it == s.end() || *it != arm) return std::nullopt;
  return static_cast<std::size_t>(it - s.begin());
}

std::optional<double> ProblemInstance::mean(int client, int arm) const {
  const auto k = slot(client, arm);
  if (!k || client >= static_cast<int>(means.size()) ||
      *k >= means[client].size()) {
    return std::nullopt;
  }
  return means[client][*k];
}

int ProblemInstance::total_slots() const noexcept {
  int total = 0;
  for (const auto& s : arm_sets) total += static_cast<int>(s.size());
  return total;
}

ValidationReport validate(const ProblemInstance& instance) {
  ValidationReport report;
  report.violations = structural_violations(instance);
  if (!report.violations.empty()) {
    report.structurally_valid = false;
    report.admissible = false;
    return report;
  }
  const ArmStats stats = arm_stats(instance);
  for (int m = 0; m < instance.num_clients(); ++m) {
    const auto& s = instance.arm_sets[m];
    double best = -std::numeric_limits<double>::infinity();
    int count = 0;
    for (int arm : s) {
      const double mu = stats.global_means[arm];
      if (mu > best) {
        best = mu;
        count = 1;
      } else if (mu == best) {
        ++count;
      }
    }
    if (count > 1) {
      report.admissible = false;
      report.violations.push_back("tied best arm at client " +
                                  std::to_string(m + 1));
    }
  }
  return report;
}

ArmStats arm_stats(const ProblemInstance& instance) {
  const auto problems = structural_violations(instance);
  if (!problems.empty()) {
    throw Error("structurally invalid instance: " + problems.front());
  }
  const int K = instance.num_arms;
  const int M = instance.num_clients();
  ArmStats stats;
  stats.global_means.assign(K, 0.0);
  stats.multiplicities.assign(K, 0);
  for (int m = 0; m < M; ++m) {
    const auto& s = instance.arm_sets[m];
    for (std::size_t k = 0; k < s.size(); ++k) {
      stats.global_means[s[k]] += instance.means[m][k];
      stats.multiplicities[s[k]] += 1;
    }
  }
  for (int i = 0; i < K; ++i) stats.global_means[i] /= stats.multiplicities[i];

  stats.best_arms.assign(M, -1);
  stats.gaps.assign(K, std::numeric_limits<double>::infinity());
  for (int m = 0; m < M; ++m) {
    const auto& s = instance.arm_sets[m];
    int best = s.front();
    for (int arm : s) {
      if (stats.global_means[arm] > stats.global_means[best]) best = arm;
    }
    stats.best_arms[m] = best;
    for (int arm : s) {
      double other = -std::numeric_limits<double>::infinity();
      for (int j : s) {
        if (j != arm) other = std::max(other, stats.global_means[j]);
      }
      const double gap = std::abs(stats.global_means[arm] - other);
      stats.gaps[arm] = std::min(stats.gaps[arm], gap);
    }
  }
  return stats;
}

bool admissible(const ArmStats& stats) noexcept {
  return std::all_of(stats.gaps.begin(), stats.gaps.end(),
                     [](double g) { return g > 0.0; });
}

ArmPartition partition_arms(const ProblemInstance& instance) {
  const int K = instance.num_arms;
  DisjointSets sets(K);
  for (const auto& s : instance.arm_sets) {
    for (std::size_t k = 1; k < s.size(); ++k) {
      if (s[0] >= 0 && s[0] < K && s[k] >= 0 && s[k] < K) sets.unite(s[0], s[k]);
    }
  }
  ArmPartition partition;
  partition.class_of.assign(K, -1);
  std::vector<int> class_of_root(K, -1);
  // Scanning arms in ascending order yields classes ordered by smallest member.
  for (int i = 0; i < K; ++i) {
    const int root = sets.find(i);
    if (class_of_root[root] < 0) {
      class_of_root[root] = partition.num_classes();
      partition.classes.emplace_back();
    }
    partition.class_of[i] = class_of_root[root];
    partition.classes[class_of_root[root]].push_back(i);
  }
  return partition;
}

ConfusionPairs confusion_pairs(const ProblemInstance& instance,
                               const ArmStats& stats) {
  if (!admissible(stats)) {
    throw Error("confusion pairs require an admissible instance");
  }
  ConfusionPairs out;
  for (int m = 0; m < instance.num_clients(); ++m) {
    const int best = stats.best_arms[m];
    for (int arm : instance.arm_sets[m]) {
      if (arm != best) out.pairs.emplace_back(best, arm);
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.pairs.erase(std::unique(out.pairs.begin(), out.pairs.end()),
                  out.pairs.end());
  return out;
}

ProblemInstance gen_cyclic_instance(int num_arms, int num_clients, int width,
                                    std::uint64_t seed) {
  if (num_arms < 2 || num_clients < 1 || width < 2 || width > num_arms) {
    throw Error("cyclic layout needs K >= 2, M >= 1 and 2 <= width <= K");
  }
  Rng rng(derive_seed(seed, 0x696e7374ULL));
  ProblemInstance v;
  v.num_arms = num_arms;
  for (int m = 0; m < num_clients; ++m) {
    std::vector<int> s;
    for (int w = 0; w < width; ++w) s.push_back((m + w) % num_arms);
    std::sort(s.begin(), s.end());
    std::vector<double> mu;
    for (int arm : s) {
      // 1-based arm index i = arm + 1; interval [K + 2 - i, K + 3 - i).
      const double lo = static_cast<double>(num_arms + 1 - arm);
      mu.push_back(rng.uniform(lo, lo + 1.0));
    }
    v.arm_sets.push_back(std::move(s));
    v.means.push_back(std::move(mu));
  }
  return v;
}

ProblemInstance gen_overlap_instance(int pattern, std::uint64_t seed) {
  if (pattern < 1 || pattern > 4) {
    throw Error("overlap pattern must be in 1..4, got " + std::to_string(pattern));
  }
  return gen_cyclic_instance(5, 5, pattern + 1, seed);
}

ProblemInstance gen_hardness_instance(double rho, int num_arms,
                                      const std::vector<std::vector<int>>& arm_sets) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw Error("rho must be positive");
  ProblemInstance v;
  v.num_arms = num_arms;
  v.arm_sets = arm_sets;
  const double scale = 1.0 / std::sqrt(rho);
  for (const auto& s : arm_sets) {
    std::vector<double> mu;
    for (int arm : s) mu.push_back(static_cast<double>(arm + 1) * scale);
    v.means.push_back(std::move(mu));
  }
  const auto problems = structural_violations(v);
  if (!problems.empty()) throw Error("invalid layout: " + problems.front());
  return v;
}

}  // namespace hetbai

#include "hetbai/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hetbai/error.hpp"

namespace hetbai {
namespace {

constexpr double kZeroWeight = 1e-300;
constexpr double kInf = std::numeric_limits<double>::infinity();

// (1/M_i^2) sum_{m owns i} 1/omega_{i,m} for every arm; +inf when an owned
// weight is (numerically) zero.
std::vector<double> reciprocal_loads(const ProblemInstance& instance,
                                     const ArmStats& stats,
                                     const Allocation& weights) {
  if (weights.weights.size() != instance.arm_sets.size()) {
    throw Error("allocation has the wrong number of clients");
  }
  std::vector<double> load(instance.num_arms, 0.0);
  for (int m = 0; m < instance.num_clients(); ++m) {
    const auto& s = instance.arm_sets[m];
    const auto& w = weights.weights[m];
    if (w.size() != s.size()) {
      throw Error("allocation row " + std::to_string(m + 1) +
                  " does not match |S_m|");
    }
    for (std::size_t k = 0; k < s.size(); ++k) {
      load[s[k]] += (w[k] <= kZeroWeight) ? kInf : 1.0 / w[k];
    }
  }
  for (int i = 0; i < instance.num_arms; ++i) {
    const double mi = static_cast<double>(stats.multiplicities[i]);
    load[i] /= mi * mi;
  }
  return load;
}

bool has_zero_weight(const Allocation& weights) {
  for (const auto& row : weights.weights) {
    for (double w : row) {
      if (w <= kZeroWeight) return true;
    }
  }
  return false;
}

std::size_t binomial_saturating(std::size_t n, std::size_t k) {
  k = std::min(k, n - k);
  long double acc = 1.0L;
  for (std::size_t j = 1; j <= k; ++j) {
    acc = acc * static_cast<long double>(n - k + j) / static_cast<long double>(j);
  }
  if (acc >= static_cast<long double>(std::numeric_limits<std::size_t>::max())) {
    return std::numeric_limits<std::size_t>::max();
  }
  return static_cast<std::size_t>(std::llround(acc));
}

// All compositions of `total` into `parts` nonnegative integers, in
// lexicographic order.
void compositions(int total, int parts, std::vector<int>& current,
                  std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    current.push_back(total);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int first = 0; first <= total; ++first) {
    current.push_back(first);
    compositions(total - first, parts - 1, current, out);
    current.pop_back();
  }
}

int grid_resolution(double grid_step) {
  if (!(grid_step > 0.0) || grid_step > 1.0) {
    throw Error("grid step must lie in (0, 1]");
  }
  const double n = 1.0 / grid_step;
  const long resolution = std::lround(n);
  if (std::abs(n - static_cast<double>(resolution)) > 1e-9 * n) {
    throw Error("grid step must divide 1");
  }
  return static_cast<int>(resolution);
}

}  // namespace

Allocation uniform_allocation(const ProblemInstance& instance) {
  Allocation out;
  for (const auto& s : instance.arm_sets) {
    out.weights.emplace_back(s.size(), 1.0 / static_cast<double>(s.size()));
  }
  return out;
}

Matrix Matrix::block(std::span<const int> index) const {
  Matrix out(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    for (std::size_t c = 0; c < index.size(); ++c) {
      out(r, c) = (*this)(index[r], index[c]);
    }
  }
  return out;
}

std::vector<double> Matrix::apply(std::span<const double> x) const {
  std::vector<double> y(n_, 0.0);
  for (std::size_t r = 0; r < n_; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < n_; ++c) acc += data_[r * n_ + c] * x[c];
    y[r] = acc;
  }
  return y;
}

Matrix h_matrix(const ProblemInstance& instance, const ArmStats& stats) {
  const int K = instance.num_arms;
  for (int i = 0; i < K; ++i) {
    if (!(stats.gaps[i] > 0.0)) {
      throw Error("H(v) needs positive gaps; arm " + std::to_string(i + 1) +
                  " has gap 0 (inadmissible instance)");
    }
  }
  Matrix h(K);
  for (const auto& s : instance.arm_sets) {
    for (int a : s) {
      for (int b : s) h(a, b) += 1.0;
    }
  }
  for (int i = 0; i < K; ++i) {
    const double d = stats.gaps[i] * static_cast<double>(stats.multiplicities[i]);
    const double scale = 1.0 / (d * d);
    for (int j = 0; j < K; ++j) h(i, j) *= scale;
  }
  return h;
}

PerronResult perron_positive_eigenvector(const Matrix& block,
                                         PowerIterationOptions options) {
  const std::size_t n = block.size();
  if (n == 0) throw Error("empty block");
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  PerronResult result;
  bool converged = false;
  for (int it = 1; it <= options.max_iters; ++it) {
    std::vector<double> y = block.apply(x);
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error("power iteration collapsed (zero or non-finite iterate)");
    }
    double diff = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      y[k] /= norm;
      diff = std::max(diff, std::abs(y[k] - x[k]));
    }
    x = std::move(y);
    result.iterations = it;
    if (diff < options.tol) {
      converged = true;
      break;
    }
  }
  const std::vector<double> ax = block.apply(x);
  const double rayleigh = std::inner_product(x.begin(), x.end(), ax.begin(), 0.0);
  if (!converged) {
    double residual = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      residual = std::max(residual, std::abs(ax[k] - rayleigh * x[k]));
    }
    throw ConvergenceError("power iteration did not converge in " +
                               std::to_string(options.max_iters) +
                               " iterations (residual " +
                               std::to_string(residual) + ")",
                           residual);
  }
  if (std::any_of(x.begin(), x.end(), [](double v) { return !(v > 0.0); })) {
    throw Error("no positive eigenvector");
  }
  result.vector = std::move(x);
  result.eigenvalue = rayleigh;
  return result;
}

GlobalVector global_vector(const ProblemInstance& instance, const ArmStats& stats,
                           const ArmPartition& partition,
                           PowerIterationOptions options) {
  const Matrix h = h_matrix(instance, stats);
  GlobalVector g;
  g.entries.assign(instance.num_arms, 0.0);
  for (const auto& cls : partition.classes) {
    const PerronResult perron = perron_positive_eigenvector(h.block(cls), options);
    for (std::size_t k = 0; k < cls.size(); ++k) {
      g.entries[cls[k]] = perron.vector[k];
    }
  }
  return g;
}

GlobalVector global_vector(const ProblemInstance& instance) {
  const ArmStats stats = arm_stats(instance);
  return global_vector(instance, stats, partition_arms(instance));
}

Allocation allocation_from_global(const GlobalVector& global,
                                  const ProblemInstance& instance) {
  Allocation out;
  for (const auto& s : instance.arm_sets) {
    double total = 0.0;
    for (int arm : s) total += global.entries[arm];
    std::vector<double> row;
    row.reserve(s.size());
    for (int arm : s) row.push_back(global.entries[arm] / total);
    // One renormalization pass absorbs the rounding of the division.
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& w : row) w /= sum;
    out.weights.push_back(std::move(row));
  }
  return out;
}

double g_tilde(const ProblemInstance& instance, const ArmStats& stats,
               const Allocation& weights) {
  if (has_zero_weight(weights)) return 0.0;
  const auto load = reciprocal_loads(instance, stats, weights);
  double best = kInf;
  for (int i = 0; i < instance.num_arms; ++i) {
    best = std::min(best, 0.5 * stats.gaps[i] * stats.gaps[i] / load[i]);
  }
  return best;
}

double g_tilde_class(const ProblemInstance& instance, const ArmStats& stats,
                     const ArmPartition& partition, const Allocation& weights,
                     int class_index) {
  const auto load = reciprocal_loads(instance, stats, weights);
  double best = kInf;
  for (int i : partition.classes.at(class_index)) {
    if (!std::isfinite(load[i])) return 0.0;
    best = std::min(best, stats.gaps[i] * stats.gaps[i] / load[i]);
  }
  return best;
}

double pair_cost(const ProblemInstance& instance, const ArmStats& stats,
                 const Allocation& weights, ArmPair pair) {
  const auto load = reciprocal_loads(instance, stats, weights);
  const auto [a, b] = pair;
  const double diff = stats.global_means[a] - stats.global_means[b];
  const double denom = load[a] + load[b];
  if (!std::isfinite(denom)) return 0.0;
  return 0.5 * diff * diff / denom;
}

double g_exact(const ProblemInstance& instance, const ArmStats& stats,
               const ConfusionPairs& pairs, const Allocation& weights) {
  if (has_zero_weight(weights)) return 0.0;
  const auto load = reciprocal_loads(instance, stats, weights);
  double best = kInf;
  for (const auto& [a, b] : pairs.pairs) {
    const double diff = stats.global_means[a] - stats.global_means[b];
    best = std::min(best, 0.5 * diff * diff / (load[a] + load[b]));
  }
  return pairs.pairs.empty() ? 0.0 : best;
}

ProblemInstance closest_alternative(const ProblemInstance& instance,
                                    const ArmStats& stats,
                                    const Allocation& weights, ArmPair pair) {
  const auto load = reciprocal_loads(instance, stats, weights);
  const auto [a, b] = pair;
  const double denom = load[a] + load[b];
  if (!std::isfinite(denom)) {
    throw Error("closest alternative needs positive weights on both arms");
  }
  const double diff = stats.global_means[a] - stats.global_means[b];
  ProblemInstance alt = instance;
  for (int m = 0; m < instance.num_clients(); ++m) {
    const auto& s = instance.arm_sets[m];
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double w = weights.weights[m][k];
      if (s[k] == a) {
        alt.means[m][k] -= diff / (stats.multiplicities[a] * w * denom);
      } else if (s[k] == b) {
        alt.means[m][k] += diff / (stats.multiplicities[b] * w * denom);
      }
    }
  }
  return alt;
}

double transport_cost(const ProblemInstance& instance,
                      const ProblemInstance& alternative,
                      const Allocation& weights) {
  double total = 0.0;
  for (int m = 0; m < instance.num_clients(); ++m) {
    for (std::size_t k = 0; k < instance.arm_sets[m].size(); ++k) {
      const double d = instance.means[m][k] - alternative.means[m][k];
      total += weights.weights[m][k] * d * d * 0.5;
    }
  }
  return total;
}

CStarInterval c_star_interval(const ProblemInstance& instance,
                              const ArmStats& stats) {
  const ArmPartition partition = partition_arms(instance);
  const GlobalVector g = global_vector(instance, stats, partition);
  const double value = g_tilde(instance, stats, allocation_from_global(g, instance));
  if (!(value > 0.0)) throw Error("degenerate allocation: g~ = 0");
  return {1.0 / value, 2.0 / value, value};
}

CStarInterval c_star_interval(const ProblemInstance& instance) {
  return c_star_interval(instance, arm_stats(instance));
}

BalanceResiduals balance_residuals(const ProblemInstance& instance,
                                   const ArmStats& stats,
                                   const ArmPartition& partition,
                                   const Allocation& weights) {
  BalanceResiduals out;
  const int M = instance.num_clients();
  for (int m1 = 0; m1 < M; ++m1) {
    for (int m2 = m1 + 1; m2 < M; ++m2) {
      for (int i1 : instance.arm_sets[m1]) {
        const auto b1 = instance.slot(m2, i1);
        if (!b1) continue;
        for (int i2 : instance.arm_sets[m1]) {
          const auto b2 = instance.slot(m2, i2);
          if (!b2 || i1 == i2) continue;
          const auto a1 = *instance.slot(m1, i1);
          const auto a2 = *instance.slot(m1, i2);
          const double r1 = weights.weights[m1][a1] / weights.weights[m1][a2];
          const double r2 = weights.weights[m2][*b1] / weights.weights[m2][*b2];
          out.balanced = std::max(out.balanced, std::abs(r1 - r2));
        }
      }
    }
  }
  const auto load = reciprocal_loads(instance, stats, weights);
  for (const auto& cls : partition.classes) {
    double lo = kInf;
    double hi = -kInf;
    double sum = 0.0;
    for (int i : cls) {
      const double value = stats.gaps[i] * stats.gaps[i] / load[i];
      lo = std::min(lo, value);
      hi = std::max(hi, value);
      sum += value;
    }
    const double mean = sum / static_cast<double>(cls.size());
    if (mean > 0.0) out.pseudo_balanced = std::max(out.pseudo_balanced, (hi - lo) / mean);
  }
  return out;
}

std::size_t simplex_grid_size(const ProblemInstance& instance, double grid_step) {
  const std::size_t n = static_cast<std::size_t>(grid_resolution(grid_step));
  std::size_t total = 1;
  for (const auto& s : instance.arm_sets) {
    const std::size_t per = binomial_saturating(n + s.size() - 1, s.size() - 1);
    if (per != 0 && total > std::numeric_limits<std::size_t>::max() / per) {
      return std::numeric_limits<std::size_t>::max();
    }
    total *= per;
  }
  return total;
}

GridOptimum brute_force_g_tilde_max(const ProblemInstance& instance,
                                    const ArmStats& stats, double grid_step) {
  const int n = grid_resolution(grid_step);
  const std::size_t points = simplex_grid_size(instance, grid_step);
  if (points > kMaxGridPoints) {
    throw Error("grid has " + std::to_string(points) + " points (limit " +
                std::to_string(kMaxGridPoints) +
                "); use a smaller instance or a coarser step");
  }
  const int M = instance.num_clients();
  const int K = instance.num_arms;

  std::vector<std::vector<std::vector<int>>> per_client(M);
  for (int m = 0; m < M; ++m) {
    std::vector<int> scratch;
    compositions(n, static_cast<int>(instance.arm_sets[m].size()), scratch,
                 per_client[m]);
  }

  std::vector<double> scale(K);
  for (int i = 0; i < K; ++i) {
    const double mi = static_cast<double>(stats.multiplicities[i]);
    scale[i] = 0.5 * stats.gaps[i] * stats.gaps[i] * mi * mi;
  }

  std::vector<std::size_t> choice(M, 0);
  std::vector<std::size_t> best_choice(M, 0);
  double best = -1.0;
  std::vector<std::vector<double>> load(M + 1, std::vector<double>(K, 0.0));

  // Depth-first over clients; load[m] holds sum of 1/omega from clients < m.
  auto visit = [&](auto&& self, int m) -> void {
    if (m == M) {
      double value = kInf;
      for (int i = 0; i < K; ++i) value = std::min(value, scale[i] / load[M][i]);
      if (value > best) {
        best = value;
        best_choice = choice;
      }
      return;
    }
    const auto& s = instance.arm_sets[m];
    for (std::size_t c = 0; c < per_client[m].size(); ++c) {
      choice[m] = c;
      load[m + 1] = load[m];
      for (std::size_t k = 0; k < s.size(); ++k) {
        const int units = per_client[m][c][k];
        load[m + 1][s[k]] += units == 0 ? kInf : static_cast<double>(n) / units;
      }
      self(self, m + 1);
    }
  };
  visit(visit, 0);

  GridOptimum out;
  out.points = points;
  for (int m = 0; m < M; ++m) {
    std::vector<double> row;
    for (int units : per_client[m][best_choice[m]]) {
      row.push_back(static_cast<double>(units) / n);
    }
    out.weights.weights.push_back(std::move(row));
  }
  out.value = g_tilde(instance, stats, out.weights);
  return out;
}

GridOptimum brute_force_g_tilde_max(const ProblemInstance& instance,
                                    double grid_step) {
  return brute_force_g_tilde_max(instance, arm_stats(instance), grid_step);
}

Solution solve(const ProblemInstance& instance) {
  Solution out;
  out.stats = arm_stats(instance);
  if (!admissible(out.stats)) {
    throw Error("instance is inadmissible (tied best arm)");
  }
  out.partition = partition_arms(instance);
  out.global = global_vector(instance, out.stats, out.partition);
  out.allocation = allocation_from_global(out.global, instance);
  const double value = g_tilde(instance, out.stats, out.allocation);
  out.c_star = {1.0 / value, 2.0 / value, value};
  return out;
}

}  // namespace hetbai

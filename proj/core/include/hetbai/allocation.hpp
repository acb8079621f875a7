#pragma once

// Optimal sampling allocation and instance-hardness functionals.
//
// Every functional takes the ArmStats it should use explicitly, so callers
// can evaluate them on empirical instances without recomputing statistics.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hetbai/instance.hpp"

namespace hetbai {

/// Per-client probability vectors; weights[m][k] belongs to arm
/// arm_sets[m][k]. Arms outside S_m implicitly have weight zero.
struct Allocation {
  std::vector<std::vector<double>> weights;
};

/// Uniform weights 1/|S_m| for every client.
Allocation uniform_allocation(const ProblemInstance& instance);

/// Positive K-vector with unit 2-norm on every equivalence class.
struct GlobalVector {
  std::vector<double> entries;
};

/// Dense row-major square matrix.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

  /// Submatrix on the given rows/columns, in the given order.
  Matrix block(std::span<const int> index) const;
  std::vector<double> apply(std::span<const double> x) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// H(v)_{i1,i2} = (1 / (Delta_{i1}^2 M_{i1}^2)) * #{m : i1, i2 in S_m}.
/// Throws hetbai::Error if some gap is zero.
Matrix h_matrix(const ProblemInstance& instance, const ArmStats& stats);

struct PerronResult {
  std::vector<double> vector;  // all entries > 0, unit 2-norm
  double eigenvalue = 0.0;     // Rayleigh quotient
  int iterations = 0;
};

struct PowerIterationOptions {
  double tol = 1e-12;
  int max_iters = 100000;
};

/// Power iteration from the all-ones vector with 2-norm normalization after
/// every product; stops once successive iterates differ by less than `tol`
/// in the infinity norm. Throws ConvergenceError (carrying the final
/// residual) on budget exhaustion and hetbai::Error if the limit is not
/// strictly positive.
PerronResult perron_positive_eigenvector(const Matrix& block,
                                         PowerIterationOptions options = {});

/// G(v): the positive unit Perron vector of each class block of H(v).
GlobalVector global_vector(const ProblemInstance& instance);
GlobalVector global_vector(const ProblemInstance& instance, const ArmStats& stats,
                           const ArmPartition& partition,
                           PowerIterationOptions options = {});

/// omega_{i,m} = G_i / sum_{i' in S_m} G_{i'}.
Allocation allocation_from_global(const GlobalVector& global,
                                  const ProblemInstance& instance);

/// min_i (Delta_i^2 / 2) / ((1/M_i^2) sum_{m owns i} 1/omega_{i,m}); zero if
/// any owned weight is zero (weights below 1e-300 count as zero).
double g_tilde(const ProblemInstance& instance, const ArmStats& stats,
               const Allocation& weights);

/// Per-class variant without the 1/2 factor: min over arms of class
/// `class_index` of Delta_i^2 / ((1/M_i^2) sum 1/omega_{i,m}). Its
/// reciprocal is the Perron eigenvalue of that class block at the optimum.
double g_tilde_class(const ProblemInstance& instance, const ArmStats& stats,
                     const ArmPartition& partition, const Allocation& weights,
                     int class_index);

/// The exact inner infimum over alternative instances, via the pairwise
/// closed form over the confusion pairs.
double g_exact(const ProblemInstance& instance, const ArmStats& stats,
               const ConfusionPairs& pairs, const Allocation& weights);

/// One term of g_exact: the cost of moving arms i1, i2 to a common mean.
double pair_cost(const ProblemInstance& instance, const ArmStats& stats,
                 const Allocation& weights, ArmPair pair);

/// The alternative instance attaining pair_cost for `pair`: arms i1 and i2
/// are moved to a common global mean, everything else is unchanged.
ProblemInstance closest_alternative(const ProblemInstance& instance,
                                    const ArmStats& stats,
                                    const Allocation& weights, ArmPair pair);

/// sum_m sum_{i in S_m} omega_{i,m} (mu_{i,m} - mu'_{i,m})^2 / 2.
double transport_cost(const ProblemInstance& instance,
                      const ProblemInstance& alternative,
                      const Allocation& weights);

/// Provable bracket on c*(v): [1/g~*, 2/g~*] with g~* = g_tilde at the
/// eigenvector allocation.
struct CStarInterval {
  double lower = 0.0;
  double upper = 0.0;
  double g_tilde_star = 0.0;
};
CStarInterval c_star_interval(const ProblemInstance& instance);
CStarInterval c_star_interval(const ProblemInstance& instance,
                              const ArmStats& stats);

struct BalanceResiduals {
  double balanced = 0.0;
  double pseudo_balanced = 0.0;
};

/// balanced: worst mismatch of weight ratios omega_{i1,m}/omega_{i2,m}
/// across clients sharing both arms. pseudo_balanced: per class,
/// (max - min) / mean of Delta_i^2 / ((1/M_i^2) sum 1/omega_{i,m}).
BalanceResiduals balance_residuals(const ProblemInstance& instance,
                                   const ArmStats& stats,
                                   const ArmPartition& partition,
                                   const Allocation& weights);

struct GridOptimum {
  Allocation weights;
  double value = 0.0;
  std::size_t points = 0;
};

inline constexpr std::size_t kMaxGridPoints = 10'000'000;

/// Exhaustive search of g_tilde over the product of per-client simplex
/// grids with spacing `grid_step`. Ties keep the first point found. Throws
/// hetbai::Error if the grid would exceed kMaxGridPoints.
GridOptimum brute_force_g_tilde_max(const ProblemInstance& instance,
                                    const ArmStats& stats, double grid_step);
GridOptimum brute_force_g_tilde_max(const ProblemInstance& instance,
                                    double grid_step);

/// Number of points of that grid, saturating at SIZE_MAX.
std::size_t simplex_grid_size(const ProblemInstance& instance, double grid_step);

/// Everything `solve` reports for an instance.
struct Solution {
  ArmStats stats;
  ArmPartition partition;
  GlobalVector global;
  Allocation allocation;
  CStarInterval c_star;
};
Solution solve(const ProblemInstance& instance);

}  // namespace hetbai

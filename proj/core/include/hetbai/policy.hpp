#pragma once

// Client and server decision rules of the heterogeneous track-and-stop
// policy, plus the uniform-sampling baseline.

#include <cstdint>
#include <span>
#include <vector>

#include "hetbai/allocation.hpp"
#include "hetbai/instance.hpp"
#include "hetbai/rng.hpp"

namespace hetbai {

/// Communication instants ceil((1+lambda)^r), r = 1, 2, ..., with repeated
/// values collapsed into one instant. Generated lazily.
///
/// Two indices are exposed for an instant t: its position in the
/// deduplicated sequence, and its round index, the smallest r with
/// ceil((1+lambda)^r) = t. They differ only while (1+lambda)^r grows by
/// less than one per step.
class CommSchedule {
 public:
  explicit CommSchedule(double lambda);

  double lambda() const noexcept { return lambda_; }

  /// The instant at 1-based deduplicated position `position`. Throws once
  /// the instant no longer fits in 64 bits.
  std::int64_t instant(std::size_t position) const;
  /// log of the instant at `position`; defined for every position.
  double log_instant(std::size_t position) const;
  bool is_instant(std::int64_t t) const;
  /// Deduplicated 1-based position of instant t; 0 if t is not an instant.
  std::size_t position(std::int64_t t) const;
  /// Smallest r with ceil((1+lambda)^r) = t; 0 if t is not an instant.
  std::int64_t round_index(std::int64_t t) const;
  /// Last instant strictly before t, or 0 (b_0) if there is none.
  std::int64_t last_instant_before(std::int64_t t) const;

 private:
  void extend_through(std::int64_t t) const;
  bool extend_count(std::size_t count) const;
  bool push_next() const;

  double lambda_;
  mutable std::vector<std::int64_t> instants_;
  mutable std::vector<std::int64_t> first_round_;
  mutable std::int64_t next_round_ = 1;
  mutable bool saturated_ = false;
};

/// Single-client bookkeeping: pull counts and reward sums per accessible
/// arm, plus the local clock t = total pulls.
class ClientState {
 public:
  ClientState(int client, std::vector<int> arms);

  int client() const noexcept { return client_; }
  const std::vector<int>& arms() const noexcept { return arms_; }
  std::int64_t time() const noexcept { return time_; }
  std::span<const std::int64_t> counts() const noexcept { return counts_; }
  std::int64_t count(std::size_t slot) const { return counts_[slot]; }
  /// Sample mean of the slot, 0 when it was never pulled.
  double empirical_mean(std::size_t slot) const;
  std::vector<double> empirical_means() const;

  /// Record one pull; throws hetbai::Error if `arm` is not accessible.
  void observe(int arm, double reward);

 private:
  int client_;
  std::vector<int> arms_;
  std::vector<std::int64_t> counts_;
  std::vector<double> sums_;
  std::int64_t time_ = 0;
};

/// D-tracking with sqrt forced exploration. `target` holds the client's
/// weights aligned with state.arms(); `t` is the time of the pull being
/// decided (counts are N(t-1)). Ties are broken uniformly with `rng`.
/// Returns the global arm index.
int select_arm(const ClientState& state, std::int64_t t,
               std::span<const double> target, Rng& rng);

/// Free-function form of ClientState::observe.
void observe(ClientState& state, int arm, double reward);

/// Uniformly random accessible arm.
int uniform_select(const ClientState& state, Rng& rng);

/// The empirical instance assembled from per-client means.
ProblemInstance empirical_instance(const ProblemInstance& layout,
                                   const std::vector<std::vector<double>>& means);

/// G(v^) if v^ is admissible, the all-ones vector otherwise (also when the
/// eigen-solve fails on a degenerate empirical instance).
GlobalVector server_global_vector(const ProblemInstance& empirical);

/// Z(t) = inf over alternatives of sum N_{i,m} (mu'_{i,m} - mu^_{i,m})^2 / 2,
/// via the pairwise closed form with raw counts. Zero when v^ is
/// inadmissible or some count is zero. counts[m][k] aligns with
/// empirical.arm_sets[m][k].
double z_statistic(const ProblemInstance& empirical,
                   const std::vector<std::vector<std::int64_t>>& counts);

/// f(x) = sum_{i=1}^{K'} x^{i-1} e^{-x} / (i-1)!.
double f_eval(double x, int k_prime);
/// Inverse of f by bracketed bisection.
double f_inverse(double delta, int k_prime);

/// beta(t, delta) = K' log(t^2 + t) + f^{-1}(delta), with f^{-1}(delta)
/// computed once.
class StoppingRule {
 public:
  StoppingRule(double delta, int k_prime, int num_arms);

  double delta() const noexcept { return delta_; }
  int k_prime() const noexcept { return k_prime_; }
  double threshold(std::int64_t t) const;
  bool should_stop(double z, std::int64_t t) const;

 private:
  double delta_;
  int k_prime_;
  int num_arms_;
  double f_inv_;
};

struct StopDecision {
  bool stop = false;
  double threshold = 0.0;
};

/// Stops iff t >= K and Z > beta(t, delta).
StopDecision should_stop(double z, std::int64_t t, double delta, int k_prime,
                         int num_arms);

/// Per-client argmax of the aggregated empirical global means; exact ties
/// go to the smallest arm index.
std::vector<int> recommend(const ProblemInstance& empirical);

/// Server side: collects reports at each instant and decides.
class Server {
 public:
  Server(const ProblemInstance& layout, double delta);

  struct Decision {
    bool stop = false;
    double z = 0.0;
    double threshold = 0.0;
    std::vector<int> recommendation;  // set when stop
    GlobalVector global;              // set when !stop and compute_global
  };

  /// Evaluates the stopping rule on the reported means and counts at
  /// instant t, then either recommends or computes the global vector.
  Decision on_instant(std::int64_t t, const std::vector<std::vector<double>>& means,
                      const std::vector<std::vector<std::int64_t>>& counts,
                      bool compute_global = true) const;

  const StoppingRule& rule() const noexcept { return rule_; }

 private:
  ProblemInstance layout_;
  StoppingRule rule_;
};

}  // namespace hetbai

#include "hetbai/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hetbai/error.hpp"

namespace hetbai {

// ---------------------------------------------------------------- schedule

CommSchedule::CommSchedule(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error("lambda must be positive, got " + std::to_string(lambda));
  }
}

bool CommSchedule::push_next() const {
  if (saturated_) return false;
  for (;;) {
    const double raw = std::ceil(std::pow(1.0 + lambda_, static_cast<double>(next_round_)));
    if (!(raw < 9.0e18)) {
      saturated_ = true;
      return false;
    }
    const auto value = static_cast<std::int64_t>(raw);
    const std::int64_t round = next_round_++;
    if (instants_.empty() || value > instants_.back()) {
      instants_.push_back(value);
      first_round_.push_back(round);
      return true;
    }
  }
}

void CommSchedule::extend_through(std::int64_t t) const {
  while (instants_.empty() || instants_.back() < t) {
    if (!push_next()) throw Error("time " + std::to_string(t) + " is beyond the schedule range");
  }
}

bool CommSchedule::extend_count(std::size_t count) const {
  while (instants_.size() < count) {
    if (!push_next()) return false;
  }
  return true;
}

std::int64_t CommSchedule::instant(std::size_t position) const {
  if (position == 0) return 0;
  if (!extend_count(position)) {
    throw Error("schedule position " + std::to_string(position) + " exceeds 64-bit time");
  }
  return instants_[position - 1];
}

double CommSchedule::log_instant(std::size_t position) const {
  if (position == 0) throw Error("log_instant needs a position >= 1");
  if (extend_count(position)) return std::log(static_cast<double>(instants_[position - 1]));
  // Past 2^63 consecutive rounds differ by far more than one, so positions
  // map one-to-one onto rounds and the ceiling is below double resolution.
  const auto extra = static_cast<double>(position - instants_.size() - 1);
  return (static_cast<double>(next_round_) + extra) * std::log1p(lambda_);
}

std::size_t CommSchedule::position(std::int64_t t) const {
  if (t < 1) return 0;
  extend_through(t);
  const auto it = std::lower_bound(instants_.begin(), instants_.end(), t);
  if (it == instants_.end() || *it != t) return 0;
  return static_cast<std::size_t>(it - instants_.begin()) + 1;
}

bool CommSchedule::is_instant(std::int64_t t) const { return position(t) != 0; }

std::int64_t CommSchedule::round_index(std::int64_t t) const {
  const std::size_t pos = position(t);
  return pos == 0 ? 0 : first_round_[pos - 1];
}

std::int64_t CommSchedule::last_instant_before(std::int64_t t) const {
  if (t <= 1) return 0;
  extend_through(t);
  const auto it = std::lower_bound(instants_.begin(), instants_.end(), t);
  return it == instants_.begin() ? 0 : *(it - 1);
}

// ------------------------------------------------------------------ client

ClientState::ClientState(int client, std::vector<int> arms)
    : client_(client),
      arms_(std::move(arms)),
      counts_(arms_.size(), 0),
      sums_(arms_.size(), 0.0) {}

double ClientState::empirical_mean(std::size_t slot) const {
  return counts_[slot] == 0 ? 0.0 : sums_[slot] / static_cast<double>(counts_[slot]);
}

std::vector<double> ClientState::empirical_means() const {
  std::vector<double> out(arms_.size());
  for (std::size_t k = 0; k < arms_.size(); ++k) out[k] = empirical_mean(k);
  return out;
}

void ClientState::observe(int arm, double reward) {
  const auto it = std::lower_bound(arms_.begin(), arms_.end(), arm);
  if (it == arms_.end() || *it != arm) {
    throw Error("client " + std::to_string(client_ + 1) +
                " cannot pull arm " + std::to_string(arm + 1));
  }
  const auto k = static_cast<std::size_t>(it - arms_.begin());
  counts_[k] += 1;
  sums_[k] += reward;
  time_ += 1;
}

void observe(ClientState& state, int arm, double reward) {
  state.observe(arm, reward);
}

namespace {

int pick_uniform(const std::vector<int>& candidates, Rng& rng) {
  if (candidates.size() == 1) return candidates.front();
  return candidates[rng.uniform_index(candidates.size())];
}

}  // namespace

int select_arm(const ClientState& state, std::int64_t t,
               std::span<const double> target, Rng& rng) {
  const auto& arms = state.arms();
  const auto counts = state.counts();
  const std::size_t n = arms.size();
  const std::int64_t min_count = *std::min_element(counts.begin(), counts.end());
  const double floor = std::sqrt(static_cast<double>(t - 1) / static_cast<double>(n));

  std::vector<int> candidates;
  if (static_cast<double>(min_count) < floor) {
    for (std::size_t k = 0; k < n; ++k) {
      if (counts[k] == min_count) candidates.push_back(arms[k]);
    }
    return pick_uniform(candidates, rng);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double score = static_cast<double>(counts[k]) - static_cast<double>(t) * target[k];
    if (score < best) {
      best = score;
      candidates.assign(1, arms[k]);
    } else if (score == best) {
      candidates.push_back(arms[k]);
    }
  }
  return pick_uniform(candidates, rng);
}

int uniform_select(const ClientState& state, Rng& rng) {
  const auto& arms = state.arms();
  return arms[rng.uniform_index(arms.size())];
}

// ------------------------------------------------------------------ server

ProblemInstance empirical_instance(const ProblemInstance& layout,
                                   const std::vector<std::vector<double>>& means) {
  ProblemInstance v;
  v.num_arms = layout.num_arms;
  v.arm_sets = layout.arm_sets;
  v.means = means;
  return v;
}

GlobalVector server_global_vector(const ProblemInstance& empirical) {
  GlobalVector ones{std::vector<double>(empirical.num_arms, 1.0)};
  const ArmStats stats = arm_stats(empirical);
  if (!admissible(stats)) return ones;
  try {
    return global_vector(empirical, stats, partition_arms(empirical));
  } catch (const Error&) {
    return ones;
  }
}

double z_statistic(const ProblemInstance& empirical,
                   const std::vector<std::vector<std::int64_t>>& counts) {
  const ArmStats stats = arm_stats(empirical);
  if (!admissible(stats)) return 0.0;
  std::vector<double> load(empirical.num_arms, 0.0);
  for (int m = 0; m < empirical.num_clients(); ++m) {
    const auto& s = empirical.arm_sets[m];
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (counts[m][k] <= 0) return 0.0;
      load[s[k]] += 1.0 / static_cast<double>(counts[m][k]);
    }
  }
  for (int i = 0; i < empirical.num_arms; ++i) {
    const double mi = static_cast<double>(stats.multiplicities[i]);
    load[i] /= mi * mi;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : confusion_pairs(empirical, stats).pairs) {
    const double diff = stats.global_means[a] - stats.global_means[b];
    best = std::min(best, 0.5 * diff * diff / (load[a] + load[b]));
  }
  return std::isfinite(best) ? best : 0.0;
}

std::vector<int> recommend(const ProblemInstance& empirical) {
  const ArmStats stats = arm_stats(empirical);
  return stats.best_arms;  // strict '>' scan keeps the smallest index on ties
}

// ------------------------------------------------------------ f machinery

double f_eval(double x, int k_prime) {
  if (!(x > 0.0)) throw Error("f is defined for x > 0");
  if (k_prime < 1) throw Error("K' must be at least 1");
  const double log_x = std::log(x);
  auto log_term = [&](int n) { return -x + n * log_x - std::lgamma(n + 1.0); };
  if (x < k_prime) {
    // f = 1 - sum_{n >= K'} x^n e^{-x} / n!; the tail is small here.
    double tail = 0.0;
    for (int n = k_prime;; ++n) {
      const double term = std::exp(log_term(n));
      tail += term;
      if (term <= 1e-17 * tail || term == 0.0) break;
    }
    return 1.0 - tail;
  }
  // log-sum-exp over the K' terms.
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(k_prime);
  for (int i = 0; i < k_prime; ++i) {
    logs[i] = log_term(i);
    max_log = std::max(max_log, logs[i]);
  }
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - max_log);
  return std::min(1.0, std::exp(max_log + std::log(acc)));
}

double f_inverse(double delta, int k_prime) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error("delta must lie in (0, 1)");
  if (k_prime < 1) throw Error("K' must be at least 1");
  const double tol = 1e-12 * delta;
  const double log_inv = std::log(1.0 / delta);
  double lo = log_inv;  // f(x) >= e^{-x}, so f(lo) >= delta
  double f_lo = f_eval(lo, k_prime);
  if (std::abs(f_lo - delta) <= tol) return lo;
  double hi = log_inv + 2.0 * k_prime * (std::log(std::log(1.0 / delta + 3.0)) + k_prime);
  while (f_eval(hi, k_prime) > delta) hi = lo + 2.0 * (hi - lo);

  double best = lo;
  double best_err = std::abs(f_lo - delta);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f_eval(mid, k_prime);
    const double err = std::abs(f_mid - delta);
    if (err < best_err) {
      best = mid;
      best_err = err;
    }
    if (err <= tol) break;
    if (f_mid > delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return best;
}

StoppingRule::StoppingRule(double delta, int k_prime, int num_arms)
    : delta_(delta),
      k_prime_(k_prime),
      num_arms_(num_arms),
      f_inv_(f_inverse(delta, k_prime)) {}

double StoppingRule::threshold(std::int64_t t) const {
  const double td = static_cast<double>(t);
  return k_prime_ * std::log(td * td + td) + f_inv_;
}

bool StoppingRule::should_stop(double z, std::int64_t t) const {
  return t >= num_arms_ && z > threshold(t);
}

StopDecision should_stop(double z, std::int64_t t, double delta, int k_prime,
                         int num_arms) {
  const StoppingRule rule(delta, k_prime, num_arms);
  return {rule.should_stop(z, t), rule.threshold(t)};
}

Server::Server(const ProblemInstance& layout, double delta)
    : layout_(layout), rule_(delta, layout.total_slots(), layout.num_arms) {}

Server::Decision Server::on_instant(
    std::int64_t t, const std::vector<std::vector<double>>& means,
    const std::vector<std::vector<std::int64_t>>& counts,
    bool compute_global) const {
  Decision d;
  const ProblemInstance empirical = empirical_instance(layout_, means);
  d.z = z_statistic(empirical, counts);
  d.threshold = rule_.threshold(t);
  d.stop = rule_.should_stop(d.z, t);
  if (d.stop) {
    d.recommendation = recommend(empirical);
  } else if (compute_global) {
    d.global = server_global_vector(empirical);
  }
  return d;
}

}  // namespace hetbai

#pragma once

// Test-side reference computations. Each one is written from the model
// definitions directly and shares no code with the library beyond the
// ProblemInstance container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "hetbai/instance.hpp"
#include "hetbai/rng.hpp"

namespace oracle {

using Weights = std::vector<std::vector<double>>;

inline std::vector<double> global_means(const hetbai::ProblemInstance& v) {
  std::vector<double> sum(v.num_arms, 0.0), cnt(v.num_arms, 0.0);
  for (int m = 0; m < v.num_clients(); ++m) {
    for (std::size_t k = 0; k < v.arm_sets[m].size(); ++k) {
      sum[v.arm_sets[m][k]] += v.means[m][k];
      cnt[v.arm_sets[m][k]] += 1.0;
    }
  }
  for (int i = 0; i < v.num_arms; ++i) sum[i] /= cnt[i];
  return sum;
}

inline std::vector<int> owners(const hetbai::ProblemInstance& v, int arm) {
  std::vector<int> out;
  for (int m = 0; m < v.num_clients(); ++m) {
    if (std::find(v.arm_sets[m].begin(), v.arm_sets[m].end(), arm) != v.arm_sets[m].end()) {
      out.push_back(m);
    }
  }
  return out;
}

inline double weight(const hetbai::ProblemInstance& v, const Weights& w, int m, int arm) {
  const auto& s = v.arm_sets[m];
  return w[m][std::find(s.begin(), s.end(), arm) - s.begin()];
}

/// Gap of each arm, scanning every owning client for its best rival.
inline std::vector<double> gaps(const hetbai::ProblemInstance& v) {
  const auto mu = global_means(v);
  std::vector<double> out(v.num_arms, std::numeric_limits<double>::infinity());
  for (int m = 0; m < v.num_clients(); ++m) {
    for (int i : v.arm_sets[m]) {
      double rival = -std::numeric_limits<double>::infinity();
      for (int j : v.arm_sets[m]) {
        if (j != i) rival = std::max(rival, mu[j]);
      }
      out[i] = std::min(out[i], std::abs(mu[i] - rival));
    }
  }
  return out;
}

/// Simplified functional evaluated from its definition.
inline double g_tilde(const hetbai::ProblemInstance& v, const Weights& w) {
  const auto d = gaps(v);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < v.num_arms; ++i) {
    const auto own = owners(v, i);
    const double mi = static_cast<double>(own.size());
    double s = 0.0;
    for (int m : own) s += 1.0 / weight(v, w, m, i);
    best = std::min(best, (d[i] * d[i] / 2.0) / (s / (mi * mi)));
  }
  return best;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    std::swap(a[c], a[p]);
    std::swap(b[c], b[p]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * x[k];
    x[c] = s / a[c][c];
  }
  return x;
}

/// Cheapest weighted move of arm i's global mean to `target`: minimizes
/// sum_m w_m d_m^2 / 2 subject to sum_m d_m = M_i (target - mu_i), solved
/// as a KKT system.
inline double move_cost(const hetbai::ProblemInstance& v, const Weights& w, int arm,
                        double target) {
  const auto own = owners(v, arm);
  const std::size_t n = own.size();
  const double need = static_cast<double>(n) * (target - global_means(v)[arm]);
  std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
  std::vector<double> b(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    a[k][k] = weight(v, w, own[k], arm);
    a[k][n] = -1.0;
    a[n][k] = 1.0;
  }
  b[n] = need;
  const auto x = solve_linear(a, b);
  double cost = 0.0;
  for (std::size_t k = 0; k < n; ++k) cost += a[k][k] * x[k] * x[k] / 2.0;
  return cost;
}

/// Per-pair infimum over instances where arms i1 and i2 tie, by golden
/// section over the common value.
inline double pair_minimum(const hetbai::ProblemInstance& v, const Weights& w, int i1,
                           int i2) {
  const auto mu = global_means(v);
  double lo = std::min(mu[i1], mu[i2]);
  double hi = std::max(mu[i1], mu[i2]);
  auto cost = [&](double x) { return move_cost(v, w, i1, x) + move_cost(v, w, i2, x); };
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = cost(x1), f2 = cost(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = cost(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = cost(x2);
    }
  }
  return std::min(f1, f2);
}

/// Numerical infimum over the confusion pairs of each client.
inline double g_exact(const hetbai::ProblemInstance& v, const Weights& w) {
  const auto mu = global_means(v);
  double best = std::numeric_limits<double>::infinity();
  for (int m = 0; m < v.num_clients(); ++m) {
    const auto& s = v.arm_sets[m];
    const int star = *std::max_element(s.begin(), s.end(),
                                       [&](int a, int b) { return mu[a] < mu[b]; });
    for (int i : s) {
      if (i != star) best = std::min(best, pair_minimum(v, w, star, i));
    }
  }
  return best;
}

/// Random strictly positive weights on each client's simplex.
inline Weights random_weights(const hetbai::ProblemInstance& v, hetbai::Rng& rng) {
  Weights w(v.num_clients());
  for (int m = 0; m < v.num_clients(); ++m) {
    double total = 0.0;
    for (std::size_t k = 0; k < v.arm_sets[m].size(); ++k) {
      w[m].push_back(0.05 + rng.uniform01());
      total += w[m].back();
    }
    for (double& x : w[m]) x /= total;
  }
  return w;
}

/// Random admissible instance with K <= max_arms, M <= max_clients and
/// every arm covered.
inline hetbai::ProblemInstance random_instance(hetbai::Rng& rng, int max_arms,
                                               int max_clients) {
  for (;;) {
    hetbai::ProblemInstance v;
    v.num_arms = 2 + static_cast<int>(rng.uniform_index(max_arms - 1));
    const int m_count = 1 + static_cast<int>(rng.uniform_index(max_clients));
    std::vector<bool> covered(v.num_arms, false);
    for (int m = 0; m < m_count; ++m) {
      std::vector<int> s;
      for (int i = 0; i < v.num_arms; ++i) {
        if (rng.uniform01() < 0.6) s.push_back(i);
      }
      if (s.size() < 2) continue;
      for (int i : s) covered[i] = true;
      std::vector<double> means;
      for (std::size_t k = 0; k < s.size(); ++k) means.push_back(rng.uniform(-2.0, 2.0));
      v.arm_sets.push_back(s);
      v.means.push_back(means);
    }
    if (v.arm_sets.empty() || std::find(covered.begin(), covered.end(), false) != covered.end()) {
      continue;
    }
    if (hetbai::validate(v).admissible) return v;
  }
}

}  // namespace oracle

#include "hslam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hslam {

double mae(const std::vector<Point2>& estimates, const std::vector<Point2>& truth) {
  if (estimates.size() != truth.size()) throw std::invalid_argument("mae: length mismatch");
  if (estimates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) sum += (estimates[i] - truth[i]).norm();
  return sum / static_cast<double>(estimates.size());
}

// Shortest augmenting path formulation with row/column potentials.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  const int m = static_cast<int>(cost[0].size());
  if (m < n) throw std::invalid_argument("hungarian: more rows than columns");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) assign[p[j] - 1] = j - 1;
  }
  return assign;
}

double ospa(const std::vector<Point2>& est, const std::vector<Point2>& truth, double cutoff,
            double p) {
  if (!(cutoff > 0.0)) throw std::invalid_argument("ospa: cutoff must be positive");
  if (!(p >= 1.0)) throw std::invalid_argument("ospa: order must be >= 1");
  const auto& small = est.size() <= truth.size() ? est : truth;
  const auto& large = est.size() <= truth.size() ? truth : est;
  const std::size_t n = large.size();
  if (n == 0) return 0.0;

  double total = 0.0;
  if (!small.empty()) {
    std::vector<std::vector<double>> cost(small.size(), std::vector<double>(n));
    for (std::size_t i = 0; i < small.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        cost[i][j] = std::pow(std::min((small[i] - large[j]).norm(), cutoff), p);
      }
    }
    const auto assign = hungarian(cost);
    for (std::size_t i = 0; i < small.size(); ++i) total += cost[i][assign[i]];
  }
  total += std::pow(cutoff, p) * static_cast<double>(n - small.size());
  return std::pow(total / static_cast<double>(n), 1.0 / p);
}

}  // namespace hslam

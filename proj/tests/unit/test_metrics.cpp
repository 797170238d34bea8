#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "hslam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace hslam;

namespace {

// OSPA by trying every assignment of the smaller set into the larger one.
double brute_ospa(std::vector<Point2> x, std::vector<Point2> y, double c, double p) {
  if (x.empty() && y.empty()) return 0.0;
  if (x.size() > y.size()) std::swap(x, y);
  const std::size_t m = x.size(), n = y.size();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  double best = 1e300;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += std::pow(std::min((x[i] - y[idx[i]]).norm(), c), p);
    best = std::min(best, s);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return std::pow((best + std::pow(c, p) * (n - m)) / n, 1.0 / p);
}

std::vector<Point2> random_set(std::mt19937_64& rng, int max_n) {
  std::uniform_int_distribution<int> count(0, max_n);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  std::vector<Point2> s(count(rng));
  for (auto& p : s) p = Point2(u(rng), u(rng));
  return s;
}

}  // namespace

TEST_CASE("mae") {
  CHECK(mae({Point2(0, 0), Point2(3, 4)}, {Point2(0, 1), Point2(0, 0)}) == doctest::Approx(3.0));
  CHECK_THROWS(mae({Point2(0, 0)}, {}));
}

TEST_CASE("hungarian matches brute force") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 1 + trial % 4, c = r + trial % 3;
    std::vector<std::vector<double>> cost(r, std::vector<double>(c));
    for (auto& row : cost)
      for (auto& v : row) v = u(rng);
    const auto a = hungarian(cost);
    REQUIRE(a.size() == static_cast<std::size_t>(r));
    double got = 0.0;
    for (int i = 0; i < r; ++i) got += cost[i][a[i]];
    std::vector<int> idx(c);
    std::iota(idx.begin(), idx.end(), 0);
    double best = 1e300;
    do {
      double s = 0.0;
      for (int i = 0; i < r; ++i) s += cost[i][idx[i]];
      best = std::min(best, s);
    } while (std::next_permutation(idx.begin(), idx.end()));
    REQUIRE(got == doctest::Approx(best));
  }
}

TEST_CASE("ospa values") {
  CHECK(ospa({}, {}) == 0.0);
  CHECK(ospa({Point2(0, 0)}, {}, 10.0) == doctest::Approx(10.0));
  CHECK(ospa({Point2(0, 0)}, {Point2(3, 4)}, 10.0) == doctest::Approx(5.0));
  // one matched pair at 1 m, one miss: (1 + 10) / 2
  CHECK(ospa({Point2(0, 0)}, {Point2(1, 0), Point2(50, 50)}, 10.0) == doctest::Approx(5.5));
  CHECK_THROWS(ospa({Point2(0, 0)}, {}, -1.0));
}

TEST_CASE("ospa axioms and brute force on random sets") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 300; ++i) {
    const auto x = random_set(rng, 5), y = random_set(rng, 5), z = random_set(rng, 5);
    for (double p : {1.0, 2.0}) {
      const double c = 4.0;
      const double dxy = ospa(x, y, c, p), dyx = ospa(y, x, c, p);
      REQUIRE(dxy == doctest::Approx(brute_ospa(x, y, c, p)));
      REQUIRE(dxy == doctest::Approx(dyx));
      REQUIRE(dxy <= c + 1e-12);
      REQUIRE(dxy >= 0.0);
      REQUIRE(ospa(x, x, c, p) == doctest::Approx(0.0));
      REQUIRE(ospa(x, z, c, p) <= dxy + ospa(y, z, c, p) + 1e-9);
    }
  }
}

#include <cmath>
#include <vector>

#include "doctest.h"

#include "berrygrip/rng.hpp"

using namespace berrygrip;

namespace {

// Standard normal pdf/cdf, independent of the library under test.
double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846); }
double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("identical seed and stream reproduce the sequence") {
  RandomStream a(123, 7);
  RandomStream b(123, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different streams of one seed do not collide") {
  RandomStream a(123, 0);
  RandomStream b(123, 1);
  int same = 0;
  for (int i = 0; i < 1000; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0, 1) and centers on one half") {
  RandomStream rng(42);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // 3 sigma for the mean of n uniforms: 3/sqrt(12 n).
  CHECK(std::abs(sum / n - 0.5) < 3.0 / std::sqrt(12.0 * n));
}

TEST_CASE("uniform_pos never returns zero") {
  RandomStream rng(7);
  for (int i = 0; i < 100000; ++i) REQUIRE(rng.uniform_pos() > 0.0);
}

TEST_CASE("gaussian moments match a standard normal") {
  RandomStream rng(9);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("truncated normal honors bounds and degenerate spread") {
  RandomStream rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.truncated_normal(1.24, 0.62, 0.05, 4.0);
    REQUIRE(x >= 0.05);
    REQUIRE(x <= 4.0);
  }
  CHECK(rng.truncated_normal(2.5, 0.0, 0.0, 5.0) == 2.5);
  CHECK_THROWS(rng.truncated_normal(10.0, 0.0, 0.0, 5.0));
  CHECK_THROWS(rng.truncated_normal(1.0, -0.1, 0.0, 5.0));
  CHECK_THROWS(rng.truncated_normal(1.0, 1.0, 5.0, 0.0));
}

TEST_CASE("truncated normal mean matches the analytic value") {
  // Closed-form truncated-normal mean as the oracle.
  const double mu = 1.24, sd = 0.62, lo = 0.05, hi = 4.0;
  const double a = (lo - mu) / sd, b = (hi - mu) / sd;
  const double expect = mu + sd * (phi(a) - phi(b)) / (Phi(b) - Phi(a));

  RandomStream rng(1234);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rng.truncated_normal(mu, sd, lo, hi);
  CHECK(std::abs(sum / n - expect) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <random>

#include "sgnlab/tridiagonal.hpp"

using namespace sgnlab;

namespace {

Tridiagonal<double> random_dominant(Eigen::Index n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> off(-1.0, 1.0), extra(0.1, 1.0);
  Tridiagonal<double> m(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.lower[i] = off(gen);
    m.upper[i] = off(gen);
    m.diag[i] = std::abs(m.lower[i]) + std::abs(m.upper[i]) + extra(gen);
  }
  return m;
}

Eigen::MatrixXd dense(const Tridiagonal<double>& m, bool cyclic) {
  const Eigen::Index n = m.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = m.diag[i];
    if (i > 0) a(i, i - 1) = m.lower[i];
    if (i + 1 < n) a(i, i + 1) = m.upper[i];
  }
  if (cyclic) {
    a(0, n - 1) = m.lower[0];
    a(n - 1, 0) = m.upper[n - 1];
  }
  return a;
}

}  // namespace

TEST_CASE("thomas matches dense LU") {
  for (Eigen::Index n : {1, 2, 5, 64}) {
    const auto m = random_dominant(n, 7 + unsigned(n));
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, -1, 2);
    const Eigen::VectorXd x = thomas_solve(m, b);
    const Eigen::VectorXd ref = dense(m, false).partialPivLu().solve(b);
    CHECK((x - ref).norm() <= 1e-13 * (1 + ref.norm()));
  }
}

TEST_CASE("cyclic solve matches dense LU") {
  for (Eigen::Index n : {3, 4, 17, 200}) {
    const auto m = random_dominant(n, 11 + unsigned(n));
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, 0.5, -3);
    const Eigen::VectorXd x = cyclic_solve(m, b);
    const Eigen::VectorXd ref = dense(m, true).partialPivLu().solve(b);
    CHECK((x - ref).norm() <= 1e-12 * (1 + ref.norm()));
  }
}

TEST_CASE("workspace solve reuses buffers") {
  const auto m = random_dominant(10, 3);
  Eigen::VectorXd x, scratch;
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(10);
  thomas_solve(m, b, x, scratch);
  const Eigen::VectorXd first = x;
  thomas_solve(m, b, x, scratch);
  CHECK(x == first);
}

TEST_CASE("dominance check") {
  auto m = random_dominant(6, 5);
  CHECK_NOTHROW(m.check_dominance(false));
  CHECK_NOTHROW(m.check_dominance(true));
  m.diag[3] = 0.5 * (std::abs(m.lower[3]) + std::abs(m.upper[3]));
  CHECK_THROWS_AS(m.check_dominance(false), TridiagonalError);

  // weak everywhere: singular periodic Laplacian
  Tridiagonal<double> lap(5);
  lap.lower.setConstant(-1);
  lap.upper.setConstant(-1);
  lap.diag.setConstant(2);
  CHECK_THROWS_AS(lap.check_dominance(true), TridiagonalError);
  CHECK_NOTHROW(lap.check_dominance(false));
}

TEST_CASE("cyclic solve rejects tiny systems") {
  const auto m = random_dominant(2, 1);
  CHECK_THROWS_AS(cyclic_solve(m, Eigen::VectorXd::Ones(2)), TridiagonalError);
}

// Thomas algorithm for tridiagonal systems, with a cyclic variant.
#ifndef SGNLAB_TRIDIAGONAL_HPP
#define SGNLAB_TRIDIAGONAL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace sgnlab {

class TridiagonalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Row i reads lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i];
/// lower[0] and upper[n-1] are the cyclic corner entries (ignored by thomas_solve).
template <typename Scalar>
struct Tridiagonal {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector lower;
  Vector diag;
  Vector upper;

  explicit Tridiagonal(Eigen::Index n = 0)
      : lower(Vector::Zero(n)), diag(Vector::Zero(n)), upper(Vector::Zero(n)) {}

  Eigen::Index size() const { return diag.size(); }

  /// Weak row dominance with at least one strict row; throws otherwise.
  void check_dominance(bool cyclic) const {
    const Eigen::Index n = size();
    bool strict = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar lo = (i > 0 || cyclic) ? std::abs(lower[i]) : Scalar(0);
      const Scalar up = (i + 1 < n || cyclic) ? std::abs(upper[i]) : Scalar(0);
      const Scalar d = std::abs(diag[i]);
      if (!(d >= lo + up)) {
        throw TridiagonalError("tridiagonal system is not diagonally dominant at row " +
                               std::to_string(i));
      }
      strict = strict || d > lo + up;
    }
    if (n > 0 && !strict) throw TridiagonalError("tridiagonal system is only weakly dominant");
  }
};

/// Solves the non-cyclic system in place of `x`; `scratch` holds modified upper coefficients.
template <typename Scalar, typename Rhs, typename Out>
void thomas_solve(const Tridiagonal<Scalar>& m, const Eigen::MatrixBase<Rhs>& rhs,
                  Eigen::MatrixBase<Out>& x, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& scratch) {
  const Eigen::Index n = m.size();
  scratch.resize(n);
  x.derived().resize(n);
  if (n == 0) return;
  Scalar beta = m.diag[0];
  x[0] = rhs[0] / beta;
  for (Eigen::Index i = 1; i < n; ++i) {
    scratch[i] = m.upper[i - 1] / beta;
    beta = m.diag[i] - m.lower[i] * scratch[i];
    x[i] = (rhs[i] - m.lower[i] * x[i - 1]) / beta;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] -= scratch[i + 1] * x[i + 1];
}

template <typename Scalar, typename Rhs>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> thomas_solve(const Tridiagonal<Scalar>& m,
                                                      const Eigen::MatrixBase<Rhs>& rhs) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x, scratch;
  thomas_solve(m, rhs, x, scratch);
  return x;
}

/// Periodic system via Sherman-Morrison on the corner entries.
template <typename Scalar, typename Rhs>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cyclic_solve(const Tridiagonal<Scalar>& m,
                                                      const Eigen::MatrixBase<Rhs>& rhs) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = m.size();
  if (n < 3) throw TridiagonalError("cyclic_solve needs at least 3 unknowns");
  const Scalar alpha = m.upper[n - 1];  // row n-1, column 0
  const Scalar beta = m.lower[0];       // row 0, column n-1
  const Scalar gamma = -m.diag[0];
  Tridiagonal<Scalar> reduced = m;
  reduced.diag[0] -= gamma;
  reduced.diag[n - 1] -= alpha * beta / gamma;
  Vector u = Vector::Zero(n);
  u[0] = gamma;
  u[n - 1] = alpha;
  Vector scratch;
  Vector x, z;
  thomas_solve(reduced, rhs, x, scratch);
  thomas_solve(reduced, u, z, scratch);
  const Scalar factor = (x[0] + beta * x[n - 1] / gamma) / (1 + z[0] + beta * z[n - 1] / gamma);
  return x - factor * z;
}

}  // namespace sgnlab

#endif  // SGNLAB_TRIDIAGONAL_HPP

// Globally adaptive Gauss-Kronrod (7-15) quadrature.
#ifndef SGNLAB_QUADRATURE_HPP
#define SGNLAB_QUADRATURE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgnlab {

template <typename Scalar>
struct QuadratureResult {
  Scalar value = 0;
  Scalar error = 0;  ///< estimated absolute error
  int evaluations = 0;
  bool converged = false;
};

struct QuadratureOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  int max_intervals = 2000;
};

/// Thrown when an adaptive integration stops short of its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved error estimate " + std::to_string(achieved) +
                           ")"),
        achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

namespace detail {

// Kronrod abscissae (descending) and weights; every other node is Gauss.
inline constexpr std::array<long double, 8> kXgk = {
    0.991455371120812639206854697526329L, 0.949107912342758524526189684047851L,
    0.864864423359769072789712788640926L, 0.741531185599394439863864773280788L,
    0.586087235467691130294144845693013L, 0.405845151377397166906606412076961L,
    0.207784955007898467600689403773245L, 0.000000000000000000000000000000000L};
inline constexpr std::array<long double, 8> kWgk = {
    0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
    0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
    0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
    0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L};
inline constexpr std::array<long double, 4> kWg = {
    0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
    0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L};

template <typename Scalar>
struct Segment {
  Scalar a, b, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <typename Scalar, typename F>
Segment<Scalar> gauss_kronrod_15(F&& f, Scalar a, Scalar b) {
  const Scalar centre = (a + b) / 2;
  const Scalar half = (b - a) / 2;
  const Scalar fc = f(centre);
  Scalar kronrod = fc * Scalar(kWgk[7]);
  Scalar gauss = fc * Scalar(kWg[3]);
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = half * Scalar(kXgk[j]);
    const Scalar sum = f(centre - dx) + f(centre + dx);
    kronrod += Scalar(kWgk[j]) * sum;
    if (j % 2 == 1) gauss += Scalar(kWg[j / 2]) * sum;
  }
  kronrod *= half;
  gauss *= half;
  using std::abs;
  return {a, b, kronrod, abs(kronrod - gauss)};
}

}  // namespace detail

/// Integrates f over [a, b]. Never throws; check `converged`.
template <typename Scalar, typename F>
QuadratureResult<Scalar> integrate_adaptive(F&& f, Scalar a, Scalar b,
                                            const QuadratureOptions& opts = {}) {
  using std::abs;
  QuadratureResult<Scalar> out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Segment<Scalar>> heap;
  heap.push(detail::gauss_kronrod_15<Scalar>(f, a, b));
  out.evaluations = 15;
  Scalar total = heap.top().value;
  Scalar total_err = heap.top().error;
  int intervals = 1;
  while (true) {
    const Scalar tol = std::max(Scalar(opts.abs_tol), Scalar(opts.rel_tol) * abs(total));
    if (total_err <= tol) {
      out.converged = true;
      break;
    }
    if (intervals >= opts.max_intervals) break;
    const auto worst = heap.top();
    const Scalar mid = (worst.a + worst.b) / 2;
    if (mid == worst.a || mid == worst.b) break;  // interval exhausted at machine precision
    heap.pop();
    const auto left = detail::gauss_kronrod_15<Scalar>(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15<Scalar>(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  // Re-sum to shed the round-off accumulated by the running update.
  Scalar value = 0;
  Scalar error = 0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = value;
  out.error = error;
  return out;
}

/// As integrate_adaptive, but throws QuadratureError when the tolerance is not met.
template <typename Scalar, typename F>
Scalar integrate(F&& f, Scalar a, Scalar b, const QuadratureOptions& opts = {}) {
  const auto r = integrate_adaptive<Scalar>(std::forward<F>(f), a, b, opts);
  if (!r.converged) {
    throw QuadratureError("adaptive quadrature did not converge", static_cast<double>(r.error));
  }
  return r.value;
}

}  // namespace sgnlab

#endif  // SGNLAB_QUADRATURE_HPP

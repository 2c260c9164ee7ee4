// Scalar root finding on a sign-changing bracket.
#ifndef SGNLAB_ROOTS_HPP
#define SGNLAB_ROOTS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sgnlab {

class RootNotBracketed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct RootResult {
  Scalar root = 0;
  Scalar residual = 0;
  int iterations = 0;
};

/// Finds x in [lo, hi] with f(x) = 0 given f(lo) f(hi) <= 0.
///
/// Illinois-modified secant steps are taken while they shrink the bracket
/// fast enough; otherwise the step falls back to bisection. Iteration stops
/// when the bracket collapses to a few ulps or the residual is at most
/// `ftol`.
template <typename Scalar, typename F>
RootResult<Scalar> find_root(F&& f, Scalar lo, Scalar hi, Scalar ftol = Scalar(0),
                             int max_iter = 400) {
  using std::abs;
  Scalar flo = f(lo);
  Scalar fhi = f(hi);
  if (flo == 0) return {lo, 0, 0};
  if (fhi == 0) return {hi, 0, 0};
  if ((flo > 0) == (fhi > 0)) {
    throw RootNotBracketed("find_root: f(" + std::to_string(static_cast<double>(lo)) + ") = " +
                           std::to_string(static_cast<double>(flo)) + " and f(" +
                           std::to_string(static_cast<double>(hi)) + ") = " +
                           std::to_string(static_cast<double>(fhi)) + " have the same sign");
  }
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  int side = 0;
  Scalar x = lo;
  Scalar fx = flo;
  int it = 0;
  while (++it <= max_iter) {
    const Scalar width = hi - lo;
    Scalar trial = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(trial > lo && trial < hi)) trial = lo + width / 2;
    x = trial;
    fx = f(x);
    if (fx == 0 || abs(fx) <= ftol) return {x, fx, it};
    if ((fx > 0) == (fhi > 0)) {
      hi = x;
      fhi = fx;
      if (side == -1) flo /= 2;
      side = -1;
    } else {
      lo = x;
      flo = fx;
      if (side == 1) fhi /= 2;
      side = 1;
    }
    // Force a bisection if the secant step barely moved the far end.
    if (hi - lo > Scalar(0.5) * width) {
      const Scalar mid = lo + (hi - lo) / 2;
      const Scalar fmid = f(mid);
      if (fmid == 0) return {mid, fmid, it};
      if ((fmid > 0) == (fhi > 0)) {
        hi = mid;
        fhi = fmid;
      } else {
        lo = mid;
        flo = fmid;
      }
      side = 0;
    }
    if (hi - lo <= 4 * eps * std::max(abs(lo), abs(hi))) break;
  }
  const bool take_lo = abs(flo) < abs(fhi);
  return {take_lo ? lo : hi, take_lo ? flo : fhi, it};
}

}  // namespace sgnlab

#endif  // SGNLAB_ROOTS_HPP

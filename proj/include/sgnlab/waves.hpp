// Periodic (cnoidal) and solitary travelling waves of the SGN equations, g = 1.
#ifndef SGNLAB_WAVES_HPP
#define SGNLAB_WAVES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sgnlab/quadrature.hpp"
#include "sgnlab/specfun.hpp"

namespace sgnlab {

/// Below this distance from m = 1 the cnoidal family is treated as solitary.
inline constexpr double kSolitaryThreshold = 1e-8;

/// Amplitude-to-depth ratio above which SGN waves are no longer physically admissible.
inline constexpr double kAdmissibleAmplitudeRatio = 0.8;

template <typename Scalar>
struct DepthVelocity {
  Scalar h;
  Scalar u;
};

inline void check_branch(int sign, const char* name) {
  if (sign != 1 && sign != -1) {
    throw std::invalid_argument(std::string(name) + " must be +1 or -1");
  }
}

/// Roots h1 <= h2 < h3 of P(h) = (h - h1)(h - h2)(h3 - h), phase speed c and branch sigma.
template <typename Scalar>
struct CnoidalParams {
  Scalar h1;
  Scalar h2;
  Scalar h3;
  Scalar c;
  int sigma = 1;

  void validate() const {
    if (!(h1 > 0)) throw std::domain_error("cnoidal wave: h1 must be positive (no vacuum)");
    if (!(h1 <= h2 && h2 < h3)) throw std::domain_error("cnoidal wave: need h1 <= h2 < h3");
    check_branch(sigma, "sigma");
  }
  Scalar modulus() const { return (h3 - h2) / (h3 - h1); }
  /// Characteristic n = 1 - h2/h3 of the third-kind integral.
  Scalar characteristic() const { return (h3 - h2) / h3; }
  Scalar cubic(Scalar h) const { return (h - h1) * (h - h2) * (h3 - h); }
  /// Coefficient of the cn argument: h = h2 + (h3 - h2) cn^2(scale * xi).
  Scalar argument_scale() const {
    using std::sqrt;
    return sqrt(3 * (h3 - h1) / (h1 * h2 * h3)) / 2;
  }
};

template <typename Scalar>
struct WaveObservables {
  Scalar a;            ///< amplitude h3 - h2
  Scalar k;            ///< wavenumber
  Scalar hbar;         ///< period mean of h
  Scalar ubar;         ///< period mean of u
  Scalar hu_rel_mean;  ///< period mean of h (u - c)
};

/// Depth and velocity at xi = x - c t, crest at xi = 0.
template <typename Scalar>
DepthVelocity<Scalar> cnoidal_profile(const CnoidalParams<Scalar>& p, Scalar xi) {
  p.validate();
  const Scalar m = p.modulus();
  if (m >= Scalar(1) - Scalar(kSolitaryThreshold)) {
    throw std::domain_error("cnoidal_profile: m is within 1e-8 of 1, use solitary_profile");
  }
  const Scalar cn = jacobi_cn(p.argument_scale() * xi, m);
  const Scalar h = p.h2 + (p.h3 - p.h2) * cn * cn;
  using std::sqrt;
  return {h, p.c - p.sigma * sqrt(p.h1 * p.h2 * p.h3) / h};
}

template <typename Scalar>
WaveObservables<Scalar> observables(const CnoidalParams<Scalar>& p) {
  p.validate();
  const Scalar m = p.modulus();
  if (m >= Scalar(1)) throw std::domain_error("observables: degenerate family at m = 1");
  using std::sqrt;
  const Scalar K = ellip_k(m);
  const Scalar E = ellip_e(m);
  const Scalar Pi = ellip_pi(p.characteristic(), m);
  const Scalar flux = sqrt(p.h1 * p.h2 * p.h3);
  WaveObservables<Scalar> w;
  w.a = p.h3 - p.h2;
  w.k = 2 * p.argument_scale() * std::numbers::pi_v<Scalar> / (2 * K);
  w.hbar = p.h1 + (p.h3 - p.h1) * E / K;
  w.hu_rel_mean = -p.sigma * flux;
  w.ubar = p.c - p.sigma * flux * Pi / (p.h3 * K);
  return w;
}

template <typename Scalar>
Scalar wavelength(const CnoidalParams<Scalar>& p) {
  return 2 * std::numbers::pi_v<Scalar> / observables(p).k;
}

/// Linear dispersion relation omega(k) on the background (hbar, ubar).
template <typename Scalar>
Scalar dispersion(Scalar k, Scalar hbar, Scalar ubar, int sigma) {
  check_branch(sigma, "sigma");
  using std::sqrt;
  return k * ubar + sigma * k * sqrt(hbar / (1 + hbar * hbar * k * k / 3));
}

/// Period average of f(h) with weight 1/sqrt(P(h)) on [h2, h3].
///
/// The substitution h = h2 + (h3 - h2) sin^2(phi) turns dh / sqrt(P) into
/// 2 dphi / sqrt(h - h1), which is smooth on [0, pi/2].
template <typename Scalar, typename F>
Scalar period_average(const CnoidalParams<Scalar>& p, F&& f,
                      const QuadratureOptions& opts = {1e-13, 1e-13, 4000}) {
  p.validate();
  if (p.modulus() >= Scalar(1)) throw std::domain_error("period_average: requires m < 1");
  using std::sqrt;
  const auto depth = [&](Scalar phi) {
    const Scalar s = std::sin(phi);
    return p.h2 + (p.h3 - p.h2) * s * s;
  };
  const Scalar upper = std::numbers::pi_v<Scalar> / 2;
  const Scalar num = integrate<Scalar>(
      [&](Scalar phi) {
        const Scalar h = depth(phi);
        return f(h) / sqrt(h - p.h1);
      },
      Scalar(0), upper, opts);
  const Scalar den = integrate<Scalar>(
      [&](Scalar phi) { return Scalar(1) / sqrt(depth(phi) - p.h1); }, Scalar(0), upper, opts);
  return num / den;
}

/// Solitary wave of amplitude a on the background (hbar, ubar), crest at x0 when t = 0.
template <typename Scalar>
struct SolitaryWave {
  Scalar hbar;
  Scalar ubar;
  Scalar a;
  int sigma = 1;
  Scalar x0 = 0;

  void validate() const {
    if (!(hbar > 0)) throw std::domain_error("solitary wave: hbar must be positive");
    if (!(a >= 0)) throw std::domain_error("solitary wave: amplitude must be non-negative");
    check_branch(sigma, "sigma");
  }
  Scalar z() const {
    using std::sqrt;
    return sqrt(a / hbar);
  }
  Scalar speed() const {
    using std::sqrt;
    return ubar + sigma * sqrt(hbar + a);
  }
  /// b in sech^2(b (x - x0 - c t)).
  Scalar inverse_width() const {
    using std::sqrt;
    return sqrt(3 * a) / (2 * hbar * sqrt(hbar + a));
  }
  bool physically_admissible() const { return a / hbar <= Scalar(kAdmissibleAmplitudeRatio); }

  static SolitaryWave from_z(Scalar hbar, Scalar ubar, Scalar z, int sigma, Scalar x0 = 0) {
    return {hbar, ubar, hbar * z * z, sigma, x0};
  }
};

template <typename Scalar>
DepthVelocity<Scalar> solitary_profile(const SolitaryWave<Scalar>& w, Scalar x, Scalar t) {
  w.validate();
  using std::cosh;
  using std::sqrt;
  const Scalar sech = Scalar(1) / cosh(w.inverse_width() * (x - w.x0 - w.speed() * t));
  const Scalar h = w.hbar + w.a * sech * sech;
  return {h, w.ubar + w.sigma * sqrt(w.hbar + w.a) * (1 - w.hbar / h)};
}

/// Array form of solitary_profile; returns (h, u) sampled at x.
template <typename Derived>
auto solitary_profile(const SolitaryWave<typename Derived::Scalar>& w,
                      const Eigen::ArrayBase<Derived>& x, typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  w.validate();
  const Array sech = (w.inverse_width() * (x - w.x0 - w.speed() * t)).cosh().inverse();
  Array h = w.hbar + w.a * sech.square();
  Array u = w.ubar + w.sigma * std::sqrt(w.hbar + w.a) * (1 - w.hbar / h);
  return DepthVelocity<Array>{std::move(h), std::move(u)};
}

}  // namespace sgnlab

#endif  // SGNLAB_WAVES_HPP

// Complete elliptic integrals and Jacobi elliptic functions.
//
// All routines use the parameter convention m = k^2. K and E come from the
// arithmetic-geometric mean, Pi from Carlson's symmetric integrals R_F and
// R_J, and sn/cn/dn from the descending AGM (Landen) transformation. There are
// no tables and no external numerical dependencies.
#ifndef SGNLAB_SPECFUN_HPP
#define SGNLAB_SPECFUN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sgnlab {

/// Parameter m of the elliptic integrals, validated to lie in [0, 1).
template <typename Scalar>
class EllipticModulus {
 public:
  explicit EllipticModulus(Scalar m) : m_(m) {
    if (!(m >= Scalar(0) && m < Scalar(1))) {
      throw std::domain_error("elliptic parameter m must lie in [0, 1), got " +
                              std::to_string(static_cast<double>(m)));
    }
  }
  Scalar value() const { return m_; }
  Scalar complement() const { return Scalar(1) - m_; }

 private:
  Scalar m_;
};

namespace detail {

template <typename Scalar>
constexpr Scalar half_pi = std::numbers::pi_v<Scalar> / Scalar(2);

template <typename Scalar>
void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

// R_C(1, 1 + e) for e > -1, closed form with a series near e = 0.
template <typename Scalar>
Scalar carlson_rc_unit(Scalar e) {
  using std::abs;
  using std::sqrt;
  if (abs(e) < Scalar(1e-4)) {
    // 1 - e/3 + e^2/5 - e^3/7 + e^4/9
    return Scalar(1) + e * (Scalar(-1) / 3 +
                            e * (Scalar(1) / 5 + e * (Scalar(-1) / 7 + e / 9)));
  }
  if (e > 0) {
    const Scalar s = sqrt(e);
    return std::atan(s) / s;
  }
  const Scalar s = sqrt(-e);
  return std::atanh(s) / s;
}

}  // namespace detail

/// Carlson's symmetric integral R_F(x, y, z); at most one argument may be 0.
template <typename Scalar>
Scalar carlson_rf(Scalar x, Scalar y, Scalar z) {
  using std::abs;
  using std::max;
  using std::pow;
  using std::sqrt;
  detail::require<Scalar>(x >= 0 && y >= 0 && z >= 0, "carlson_rf: negative argument");
  const Scalar x0 = x, y0 = y, z0 = z;
  const Scalar a0 = (x + y + z) / 3;
  const Scalar q = pow(3 * std::numeric_limits<Scalar>::epsilon(), Scalar(-1) / 6) *
                   max({abs(a0 - x), abs(a0 - y), abs(a0 - z)});
  Scalar a = a0;
  Scalar scale = 1;  // 4^-n
  while (q * scale >= abs(a)) {
    const Scalar sx = sqrt(x), sy = sqrt(y), sz = sqrt(z);
    const Scalar lambda = sx * sy + sy * sz + sz * sx;
    x = (x + lambda) / 4;
    y = (y + lambda) / 4;
    z = (z + lambda) / 4;
    a = (a + lambda) / 4;
    scale /= 4;
  }
  const Scalar X = (a0 - x0) * scale / a;
  const Scalar Y = (a0 - y0) * scale / a;
  const Scalar Z = -X - Y;
  const Scalar e2 = X * Y - Z * Z;
  const Scalar e3 = X * Y * Z;
  return (Scalar(1) - e2 / 10 + e3 / 14 + e2 * e2 / 24 - 3 * e2 * e3 / 44) / sqrt(a);
}

/// Carlson's symmetric integral R_J(x, y, z, p) for p > 0.
template <typename Scalar>
Scalar carlson_rj(Scalar x, Scalar y, Scalar z, Scalar p) {
  using std::abs;
  using std::max;
  using std::pow;
  using std::sqrt;
  detail::require<Scalar>(x >= 0 && y >= 0 && z >= 0 && p > 0,
                          "carlson_rj: arguments out of domain");
  const Scalar x0 = x, y0 = y, z0 = z;
  const Scalar a0 = (x + y + z + 2 * p) / 5;
  const Scalar delta = (p - x) * (p - y) * (p - z);
  const Scalar q = pow(std::numeric_limits<Scalar>::epsilon() / 4, Scalar(-1) / 6) *
                   max({abs(a0 - x), abs(a0 - y), abs(a0 - z), abs(a0 - p)});
  Scalar a = a0;
  Scalar scale = 1;  // 4^-n
  Scalar sum = 0;
  while (q * scale >= abs(a)) {
    const Scalar sx = sqrt(x), sy = sqrt(y), sz = sqrt(z), sp = sqrt(p);
    const Scalar lambda = sx * sy + sy * sz + sz * sx;
    const Scalar d = (sp + sx) * (sp + sy) * (sp + sz);
    const Scalar e = delta * scale * scale * scale / (d * d);
    sum += scale * detail::carlson_rc_unit(e) / d;
    x = (x + lambda) / 4;
    y = (y + lambda) / 4;
    z = (z + lambda) / 4;
    p = (p + lambda) / 4;
    a = (a + lambda) / 4;
    scale /= 4;
  }
  const Scalar X = (a0 - x0) * scale / a;
  const Scalar Y = (a0 - y0) * scale / a;
  const Scalar Z = (a0 - z0) * scale / a;
  const Scalar P = (-X - Y - Z) / 2;
  const Scalar e2 = X * Y + X * Z + Y * Z - 3 * P * P;
  const Scalar e3 = X * Y * Z + 2 * e2 * P + 4 * P * P * P;
  const Scalar e4 = (2 * X * Y * Z + e2 * P + 3 * P * P * P) * P;
  const Scalar e5 = X * Y * Z * P * P;
  const Scalar series = Scalar(1) - 3 * e2 / 14 + e3 / 6 + 9 * e2 * e2 / 88 - 3 * e4 / 22 -
                        9 * e2 * e3 / 52 + 3 * e5 / 26;
  return scale * series / (a * sqrt(a)) + 6 * sum;
}

/// Complete elliptic integral of the first kind K(m), 0 <= m < 1.
template <typename Scalar>
Scalar ellip_k(Scalar m) {
  const EllipticModulus<Scalar> mod(m);
  using std::abs;
  using std::sqrt;
  Scalar a = 1;
  Scalar b = sqrt(mod.complement());
  while (abs(a - b) > 2 * std::numeric_limits<Scalar>::epsilon() * a) {
    const Scalar an = (a + b) / 2;
    b = sqrt(a * b);
    a = an;
  }
  return detail::half_pi<Scalar> / a;
}

/// Complete elliptic integral of the second kind E(m), 0 <= m <= 1.
template <typename Scalar>
Scalar ellip_e(Scalar m) {
  using std::abs;
  using std::sqrt;
  detail::require<Scalar>(m >= 0 && m <= 1, "ellip_e: m must lie in [0, 1]");
  if (m == Scalar(1)) return Scalar(1);
  Scalar a = 1;
  Scalar b = sqrt(Scalar(1) - m);
  Scalar weight = Scalar(0.5);  // 2^(n-1)
  Scalar sum = weight * m;      // c_0^2 = m
  while (abs(a - b) > 2 * std::numeric_limits<Scalar>::epsilon() * a) {
    const Scalar c = (a - b) / 2;
    const Scalar an = (a + b) / 2;
    b = sqrt(a * b);
    a = an;
    weight *= 2;
    sum += weight * c * c;
  }
  return detail::half_pi<Scalar> / a * (Scalar(1) - sum);
}

/// Complete elliptic integral of the third kind
///   Pi(n, m) = int_0^{pi/2} dtheta / ((1 - n sin^2) sqrt(1 - m sin^2)),
/// for 0 <= n < 1 and 0 <= m < 1.
template <typename Scalar>
Scalar ellip_pi(Scalar n, Scalar m) {
  const EllipticModulus<Scalar> mod(m);
  detail::require<Scalar>(n >= 0 && n < 1, "ellip_pi: n must lie in [0, 1)");
  if (n == Scalar(0)) return ellip_k(m);
  const Scalar y = mod.complement();
  return carlson_rf(Scalar(0), y, Scalar(1)) +
         n / 3 * carlson_rj(Scalar(0), y, Scalar(1), Scalar(1) - n);
}

template <typename Scalar>
struct JacobiTriple {
  Scalar sn;
  Scalar cn;
  Scalar dn;
};

/// sn, cn, dn at real argument x for 0 <= m <= 1.
template <typename Scalar>
JacobiTriple<Scalar> jacobi_elliptic(Scalar x, Scalar m) {
  using std::abs;
  using std::sqrt;
  detail::require<Scalar>(m >= 0 && m <= 1, "jacobi_elliptic: m must lie in [0, 1]");
  if (m == Scalar(0)) return {std::sin(x), std::cos(x), Scalar(1)};
  if (m == Scalar(1)) {
    const Scalar sech = Scalar(1) / std::cosh(x);
    return {std::tanh(x), sech, sech};
  }
  constexpr int kMaxLevels = 40;
  std::array<Scalar, kMaxLevels> a{};
  std::array<Scalar, kMaxLevels> c{};
  a[0] = 1;
  Scalar b = sqrt(Scalar(1) - m);
  c[0] = sqrt(m);
  int level = 0;
  Scalar twopow = 1;
  while (abs(c[level]) > std::numeric_limits<Scalar>::epsilon() && level + 1 < kMaxLevels) {
    const Scalar an = (a[level] + b) / 2;
    c[level + 1] = (a[level] - b) / 2;
    b = sqrt(a[level] * b);
    a[level + 1] = an;
    ++level;
    twopow *= 2;
  }
  Scalar phi = twopow * a[level] * x;
  Scalar phi_prev = phi;
  for (int n = level; n > 0; --n) {
    phi_prev = phi;
    phi = (phi + std::asin(c[n] / a[n] * std::sin(phi))) / 2;
  }
  const Scalar sn = std::sin(phi);
  const Scalar cn = std::cos(phi);
  const Scalar dn = level > 0 ? cn / std::cos(phi_prev - phi) : Scalar(1);
  return {sn, cn, dn};
}

template <typename Scalar>
Scalar jacobi_cn(Scalar x, Scalar m) {
  return jacobi_elliptic(x, m).cn;
}

template <typename Scalar>
Scalar jacobi_sn(Scalar x, Scalar m) {
  return jacobi_elliptic(x, m).sn;
}

/// asinh(z) = ln(z + sqrt(z^2 + 1)).
template <typename Scalar>
Scalar arcsinh(Scalar z) {
  return std::asinh(z);
}

}  // namespace sgnlab

#endif  // SGNLAB_SPECFUN_HPP

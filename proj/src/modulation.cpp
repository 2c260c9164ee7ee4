#include "sgnlab/modulation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sgnlab/ode.hpp"
#include "sgnlab/quadrature.hpp"
#include "sgnlab/roots.hpp"
#include "sgnlab/waves.hpp"

namespace sgnlab {

namespace {

constexpr double kSeriesCutoff = 1e-3;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_sm(int sm) { check_branch(sm, "sigma*mu"); }

// Taylor sums for the cancelling combinations of sqrt(1+z^2) and asinh(z);
// both are O(z^3). The series converge for |z| < 1 and are used for z <= 0.5.
constexpr double kDirectAbove = 0.5;

// z sqrt(1+z^2) - asinh(z)
double d1(double z) {
  if (z > kDirectAbove) return z * std::sqrt(1 + z * z) - std::asinh(z);
  const double z2 = z * z;
  double term = z;
  double half_binom = 1;  // binom(1/2, k)
  double central = 1;     // (2k)! / (4^k k!^2)
  double sum = 0;
  for (int k = 1; k < 200; ++k) {
    half_binom *= (1.5 - k) / k;
    central *= (2.0 * k - 1) / (2.0 * k);
    term *= z2;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double piece = (half_binom - sign * central / (2 * k + 1)) * term;
    sum += piece;
    if (std::abs(piece) <= 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// (3z + 2z^3) / sqrt(1+z^2) - 3 asinh(z)
double d2(double z) {
  if (z > kDirectAbove) return (3 * z + 2 * z * z * z) / std::sqrt(1 + z * z) - 3 * std::asinh(z);
  const double z2 = z * z;
  double term = z;
  double central_prev = 1;  // c_{k-1}
  double sum = 0;
  for (int k = 1; k < 200; ++k) {
    const double central = central_prev * (2.0 * k - 1) / (2.0 * k);
    term *= z2;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double coef = 3 * sign * central * (2.0 * k / (2 * k + 1)) - 2 * sign * central_prev;
    const double piece = coef * term;
    sum += piece;
    central_prev = central;
    if (std::abs(piece) <= 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// 2 z sqrt(1+z^2) - asinh(z); no cancellation.
double d3(double z) { return 2 * z * std::sqrt(1 + z * z) - std::asinh(z); }

// Coefficients of hbar_x/sqrt(hbar) and of -ubar_x in the z equation:
// g_{sigma mu} = A - sigma mu B.
struct ZCoefficients {
  double A;
  double B;
};

ZCoefficients z_coefficients(double z) {
  if (z < kSeriesCutoff) {
    const double z2 = z * z;
    const double gp = z * (0.5 + z2 * (1.0 / 6 + z2 * 47.0 / 360));
    const double gm = z * (1.5 + z2 * (-0.1 + z2 * 103.0 / 168));
    return {(gp + gm) / 2, (gm - gp) / 2};
  }
  const double s2 = 1 + z * z;
  const double den = d3(z);
  return {3 * s2 * std::sqrt(s2) / (2 * z) * d1(z) / den, s2 / (2 * z) * d2(z) / den};
}

const QuadratureOptions kInvariantQuad{1e-17, 1e-15, 4000};

double f_plus(double z) {
  if (z < kSeriesCutoff) {
    const double z2 = z * z;
    return z2 * (0.5 + z2 * (-7.0 / 48 + z2 * (7.0 / 720 + z2 * 3679.0 / 53760)));
  }
  const auto integrand = [](double s) {
    const double root = std::sqrt(1 + s * s);
    return s * s / ((root + 1) * g_coeff(s, 1));
  };
  return integrate<double>(integrand, 0.0, z, kInvariantQuad);
}

// f_-(z) = (4/3) ln z + int_1^z [(sqrt(1+s^2) + 1)/g_-(s) - 4/(3s)] ds
double f_minus(double z) {
  const auto regular = [](double s) {
    return (std::sqrt(1 + s * s) + 1) / g_coeff(s, -1) - 4.0 / (3.0 * s);
  };
  return 4.0 / 3.0 * std::log(z) + integrate<double>(regular, 1.0, z, kInvariantQuad);
}

double solve_increasing(const std::function<double(double)>& f, double target, double lo,
                        double hi) {
  return find_root<double>([&](double z) { return f(z) - target; }, lo, hi).root;
}

}  // namespace

ShallowWaterInvariants ShallowWaterInvariants::of(const MeanState& s) {
  const double c = 2 * std::sqrt(s.hbar);
  return {s.ubar + c, s.ubar - c};
}

InteractionKind::InteractionKind(int sigma_, int mu_) : sigma(sigma_), mu(mu_) {
  check_branch(sigma, "sigma");
  check_branch(mu, "mu");
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Transmitted:
      return "transmitted";
    case Outcome::Trapped:
      return "trapped";
    case Outcome::NoInteraction:
      return "no_interaction";
  }
  return "unknown";
}

std::string to_string(InvariantMethod m) {
  return m == InvariantMethod::Exact ? "exact" : "fitting";
}

InvariantMethod parse_method(const std::string& s) {
  if (s == "exact") return InvariantMethod::Exact;
  if (s == "fitting") return InvariantMethod::Fitting;
  throw std::invalid_argument("unknown invariant method '" + s + "' (expected exact|fitting)");
}

double g_coeff(double z, int sm) {
  check_sm(sm);
  if (!(z >= 0)) throw std::domain_error("g_coeff: z must be non-negative");
  if (z == 0) return 0;
  const auto [A, B] = z_coefficients(z);
  return A - sm * B;
}

double f_exact(double z, int sm) {
  check_sm(sm);
  if (sm == 1) {
    if (!(z >= 0)) throw std::domain_error("f_exact: z must be non-negative");
    return f_plus(z);
  }
  if (!(z > 0)) throw std::domain_error("f_exact: f_- is singular at z = 0");
  return f_minus(z);
}

double f_fitting(double z) {
  if (!(z >= 0)) throw std::domain_error("f_fitting: z must be non-negative");
  // beta = alpha - 1 with alpha = sqrt(1 + z^2)
  const double beta = z * z / (std::sqrt(1 + z * z) + 1);
  if (!(beta < 3)) throw std::domain_error("f_fitting: requires sqrt(1 + z^2) < 4");
  return 0.5 * std::log1p(beta) - 0.4 * std::log1p(beta / 2) - 2.1 * std::log1p(-beta / 3);
}

double q_exact(double hbar, double z, int sm) {
  if (!(hbar > 0)) throw std::domain_error("q_exact: hbar must be positive");
  return hbar * std::exp(f_exact(z, sm));
}

double q_fitting(double hbar, double z) {
  if (!(hbar > 0)) throw std::domain_error("q_fitting: hbar must be positive");
  return hbar * std::exp(f_fitting(z));
}

LogInvariant exact_invariant(int sm) {
  check_sm(sm);
  return {[sm](double z) { return f_exact(z, sm); }, sm, kInf};
}

LogInvariant fitting_invariant() {
  return {f_fitting, 1, std::sqrt(15.0) * (1 - 1e-15)};
}

InteractionPrediction transmit_with(const LogInvariant& inv, double h_minus, double h_plus,
                                    double z_minus, const TransmitOptions& opts) {
  if (!(h_minus > 0 && h_plus > 0)) throw std::domain_error("transmit: depths must be positive");
  if (!(z_minus >= 0)) throw std::domain_error("transmit: z_minus must be non-negative");
  check_sm(inv.sm);
  check_branch(opts.sigma, "sigma");
  InteractionPrediction out;
  if (z_minus == 0) return out;

  const double cap = std::min(opts.z_cap, inv.z_limit);
  const double target = inv.f(z_minus) + std::log(h_minus / h_plus);
  const double f_cap = inv.f(cap);
  if (f_cap < target) {
    throw RootNotBracketed("transmit: transmitted z exceeds z_cap = " + std::to_string(cap) +
                           " (f(z_cap) = " + std::to_string(f_cap) +
                           ", required " + std::to_string(target) + ")");
  }
  double lo = 0;
  if (inv.sm == 1) {
    if (target <= inv.f(0.0)) {
      out.outcome = Outcome::Trapped;
      out.physically_admissible = z_minus * z_minus <= kAdmissibleAmplitudeRatio;
      return out;
    }
  } else {
    lo = std::min(z_minus, 1.0);
    while (inv.f(lo) >= target) {
      lo /= 4;
      if (lo < 1e-150) {
        throw RootNotBracketed("transmit: no lower bracket for the head-on invariant");
      }
    }
  }
  const double z_plus = solve_increasing(inv.f, target, lo, cap);
  out.outcome = Outcome::Transmitted;
  out.z_plus = z_plus;
  out.a_plus = h_plus * z_plus * z_plus;
  out.c_plus = opts.u_plus + opts.sigma * std::sqrt(h_plus + *out.a_plus);
  out.physically_admissible = z_minus * z_minus <= kAdmissibleAmplitudeRatio &&
                              z_plus * z_plus <= kAdmissibleAmplitudeRatio;
  return out;
}

InteractionPrediction transmit(double h_minus, double h_plus, double z_minus, int sm,
                               const TransmitOptions& opts) {
  check_sm(sm);
  if (opts.method == InvariantMethod::Fitting) {
    if (sm != 1) {
      throw std::invalid_argument("transmit: the fitting invariant exists only for sigma*mu = +1");
    }
    return transmit_with(fitting_invariant(), h_minus, h_plus, z_minus, opts);
  }
  return transmit_with(exact_invariant(sm), h_minus, h_plus, z_minus, opts);
}

double z_min_exact(double ratio, double z_cap) {
  if (!(ratio > 1)) throw std::domain_error("z_min_exact: requires h+/h- > 1");
  return solve_increasing(f_plus, std::log(ratio), 0.0, z_cap);
}

double z_min_fitting(double ratio) {
  if (!(ratio > 1)) throw std::domain_error("z_min_fitting: requires h+/h- > 1");
  return solve_increasing(f_fitting, std::log(ratio), 0.0, fitting_invariant().z_limit);
}

DswEdge dsw_lead_amplitude(double h_minus, double h_plus, InvariantMethod method,
                           double u_plus) {
  if (!(h_plus > 0 && h_minus > h_plus)) {
    throw std::domain_error("dsw_lead_amplitude: requires h- > h+ > 0");
  }
  const double ratio = h_minus / h_plus;
  double z = 0;
  if (method == InvariantMethod::Fitting) {
    if (ratio > kFittingAdmissibleRatio) {
      throw std::domain_error("dsw_lead_amplitude: fitting law outside its admissible range 1 < "
                              "h-/h+ <= 1.43 (got " + std::to_string(ratio) + ")");
    }
    z = solve_increasing(f_fitting, std::log(ratio), 0.0, fitting_invariant().z_limit);
  } else {
    z = solve_increasing(f_plus, std::log(ratio), 0.0, 10.0);
  }
  const double a = h_plus * z * z;
  return {z, a, u_plus + std::sqrt(h_plus + a)};
}

RiemannStep RiemannStep::simple(double h_minus, double h_plus, int mu, double u_plus) {
  check_branch(mu, "mu");
  if (!(h_minus > 0 && h_plus > 0)) throw std::invalid_argument("Riemann step: depths must be positive");
  const double u_minus = u_plus + 2 * mu * (std::sqrt(h_minus) - std::sqrt(h_plus));
  return {h_minus, u_minus, h_plus, u_plus, mu};
}

void RiemannStep::validate(double tol) const {
  check_branch(mu, "mu");
  if (!(h_minus > 0 && h_plus > 0)) throw std::invalid_argument("Riemann step: depths must be positive");
  const double left = u_minus - 2 * mu * std::sqrt(h_minus);
  const double right = u_plus - 2 * mu * std::sqrt(h_plus);
  if (std::abs(left - right) > tol * (1 + std::abs(left))) {
    throw std::invalid_argument("Riemann step violates u- - 2 mu sqrt(h-) = u+ - 2 mu sqrt(h+)");
  }
}

double RiemannStep::carried_invariant() const { return u_minus - 2 * mu * std::sqrt(h_minus); }

double RiemannStep::characteristic_speed(double hbar) const {
  return carried_invariant() + 3 * mu * std::sqrt(hbar);
}

bool RiemannStep::is_rarefaction() const {
  return mu * (std::sqrt(h_plus) - std::sqrt(h_minus)) > 0;
}

std::pair<double, double> RiemannStep::fan_edges() const {
  return {characteristic_speed(h_minus), characteristic_speed(h_plus)};
}

MeanState simple_wave_mean(double x_over_t, const RiemannStep& step) {
  step.validate();
  if (!step.is_rarefaction()) {
    throw std::domain_error("simple_wave_mean: compressive step forms a DSW, not a fan");
  }
  const auto [left, right] = step.fan_edges();
  if (x_over_t <= left) return {step.h_minus, step.u_minus};
  if (x_over_t >= right) return {step.h_plus, step.u_plus};
  const double r = step.carried_invariant();
  const double root = step.mu * (x_over_t - r) / 3;
  return {root * root, r + 2 * step.mu * root};
}

MeanState simple_wave_mean(double x_over_t, double h_minus, double h_plus, int mu,
                           double u_minus) {
  const double u_plus = u_minus - 2 * mu * (std::sqrt(h_minus) - std::sqrt(h_plus));
  return simple_wave_mean(x_over_t, RiemannStep{h_minus, u_minus, h_plus, u_plus, mu});
}

SolitonPath soliton_path_through_rw(const RiemannStep& step, const IncidentSoliton& wave,
                                    const PathOptions& opts) {
  step.validate();
  check_branch(wave.sigma, "sigma");
  if (!step.is_rarefaction()) {
    throw std::domain_error("soliton_path_through_rw: step is not a rarefaction");
  }
  if (!(wave.z_minus >= 0)) throw std::domain_error("soliton_path_through_rw: z- < 0");
  if (wave.x0 > 0) throw std::invalid_argument("soliton_path_through_rw: wave must start at x0 <= 0");

  const int sigma = wave.sigma;
  const int sm = sigma * step.mu;
  const auto [xi_left, xi_right] = step.fan_edges();
  const double c_minus =
      step.u_minus + sigma * std::sqrt(step.h_minus * (1 + wave.z_minus * wave.z_minus));

  SolitonPath path;
  path.points.push_back({0.0, wave.x0, wave.z_minus, step.h_minus});

  if (wave.z_minus == 0 || c_minus <= xi_left) {
    // Nothing to track: the wave never meets the fan, or there is no wave.
    path.points.push_back({1.0, wave.x0 + c_minus, wave.z_minus, step.h_minus});
    return path;
  }
  if (wave.x0 == 0) {
    throw std::invalid_argument("soliton_path_through_rw: a finite wave must start at x0 < 0");
  }

  const double t_enter = wave.x0 / (xi_left - c_minus);
  path.t_enter = t_enter;
  path.points.push_back({t_enter, xi_left * t_enter, wave.z_minus, step.h_minus});

  using State = Eigen::Vector2d;
  const auto rhs = [&](double, const State& y) {
    const double xi = std::clamp(y[0], xi_left, xi_right);
    const double z = std::max(y[1], 0.0);
    const MeanState mean = simple_wave_mean(xi, step);
    const double c_s = mean.ubar + sigma * std::sqrt(mean.hbar * (1 + z * z));
    return State(c_s - y[0], -(2.0 * sm / 3.0) * g_coeff(z, sm));
  };

  const double s0 = std::log(t_enter);
  const double s1 = s0 + std::log(opts.horizon);
  double s_prev = s0;
  State y_prev(xi_left, wave.z_minus);
  bool exited = false;
  bool died = false;
  const auto observer = [&](double s, const State& y) {
    if (y[0] >= xi_right) {
      exited = true;
      return false;
    }
    const double t = std::exp(s);
    path.points.push_back({t, y[0] * t, y[1], simple_wave_mean(y[0], step).hbar});
    if (sm == 1 && y[1] < opts.z_floor) {
      died = true;
      return false;
    }
    s_prev = s;
    y_prev = y;
    return true;
  };
  OdeOptions ode;
  ode.abs_tol = opts.tol;
  ode.rel_tol = opts.tol;
  ode.initial_step = 1e-3;
  ode.max_step = 0.05;
  integrate_ode<State>(rhs, s0, y_prev, s1, observer, ode);

  if (exited) {
    // Locate the exit by shortening the last step until x/t hits the fan edge.
    State err;
    const auto edge_gap = [&](double h) {
      return dormand_prince_step<State>(rhs, s_prev, y_prev, h, err)[0] - xi_right;
    };
    double h_hi = 0.05;
    while (edge_gap(h_hi) < 0) h_hi *= 2;
    const double h = find_root<double>(edge_gap, 0.0, h_hi).root;
    const State y = dormand_prince_step<State>(rhs, s_prev, y_prev, h, err);
    const double t_exit = std::exp(s_prev + h);
    const double z_plus = y[1];
    path.t_exit = t_exit;
    path.points.push_back({t_exit, xi_right * t_exit, z_plus, step.h_plus});
    auto& pred = path.prediction;
    pred.outcome = Outcome::Transmitted;
    pred.z_plus = z_plus;
    pred.a_plus = step.h_plus * z_plus * z_plus;
    pred.c_plus = step.u_plus + sigma * std::sqrt(step.h_plus + *pred.a_plus);
    pred.physically_admissible = wave.z_minus * wave.z_minus <= kAdmissibleAmplitudeRatio &&
                                 z_plus * z_plus <= kAdmissibleAmplitudeRatio;
    return path;
  }

  (void)died;
  path.prediction.outcome = Outcome::Trapped;
  path.prediction.physically_admissible =
      wave.z_minus * wave.z_minus <= kAdmissibleAmplitudeRatio;
  if (sm == 1) {
    const double q = q_exact(step.h_minus, wave.z_minus, sm);
    path.trap_xi = step.characteristic_speed(q);
  } else {
    path.trap_xi = path.points.back().x / path.points.back().t;
  }
  return path;
}

WaveActionPair wave_action_pair(double n, double hbar, int sigma) {
  check_branch(sigma, "sigma");
  if (!(n > 0 && n < 1)) throw std::domain_error("wave_action_pair: n must lie in (0, 1)");
  if (!(hbar > 0)) throw std::domain_error("wave_action_pair: hbar must be positive");
  const double rn = std::sqrt(n);
  const double log_term = std::log((1 - rn) / (1 + rn));
  const double F = std::pow(hbar, 1.5) / std::sqrt(1 - n) *
                   ((6 - 2 * n) * rn / (3 * (1 - n)) + log_term);
  const double G = sigma * hbar * hbar * hbar / (1 - n) * (rn / (1 - n) + 0.5 * log_term);
  const double lambda = sigma * std::pow(hbar, 1.5) / std::sqrt(1 - n);
  return {F, G, lambda};
}

SolitonicCoefficients solitonic_rhs(double hbar, double ubar, double z, int sigma) {
  check_branch(sigma, "sigma");
  if (!(hbar > 0)) throw std::domain_error("solitonic_rhs: hbar must be positive");
  if (!(z >= 0)) throw std::domain_error("solitonic_rhs: z must be non-negative");
  const double root_h = std::sqrt(hbar);
  SolitonicCoefficients out;
  out.v_minus = ubar - root_h;
  out.v_plus = ubar + root_h;
  out.c_s = ubar + sigma * std::sqrt(hbar * (1 + z * z));
  if (z == 0) {
    out.coef_hx = 0;
    out.coef_ux = 0;
    return out;
  }
  const auto [A, B] = z_coefficients(z);
  out.coef_hx = sigma * A / root_h;
  out.coef_ux = -B;
  return out;
}

AmplitudeCoefficients amplitude_form(double hbar, double ubar, double a, int sigma) {
  check_branch(sigma, "sigma");
  if (!(hbar > 0 && a > 0)) throw std::domain_error("amplitude_form: need hbar > 0, a > 0");
  const double n = a / (hbar + a);
  const double rn = std::sqrt(n);
  const double at = std::atanh(rn);
  const double den = 2 * rn - (1 - n) * at;
  const double A = ((2 * n - 3) * rn + (3 - n) * (1 - n) * at) / (std::pow(1 - n, 1.5) * den);
  const double B = (3 * rn - (3 - n) * at) / den;
  return {ubar + sigma * std::sqrt(hbar + a), -sigma * A * std::sqrt(hbar), -B * hbar};
}

}  // namespace sgnlab

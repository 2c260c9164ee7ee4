#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "sgnlab/modulation.hpp"
#include "sgnlab/ode.hpp"
#include "sgnlab/roots.hpp"

using namespace sgnlab;

namespace {

// Integrates dz/dhbar = -g(z) / (hbar (sqrt(1+z^2) - sm)) from (h0, z0) to h1.
double integrate_ode_q(double h0, double z0, double h1, int sm) {
  using V = Eigen::Matrix<double, 1, 1>;
  auto rhs = [sm](double h, const V& y) {
    const double z = y[0];
    V d;
    d[0] = -g_coeff(z, sm) / (h * (std::sqrt(1 + z * z) - sm));
    return d;
  };
  OdeOptions opts;
  opts.abs_tol = 1e-14;
  opts.rel_tol = 1e-14;
  V y0;
  y0[0] = z0;
  return integrate_ode<V>(rhs, h0, y0, h1, [](double, const V&) { return true; }, opts).second[0];
}

double z2(const InteractionPrediction& p) { return *p.z_plus * *p.z_plus; }

}  // namespace

TEST_CASE("g at reference points") {
  CHECK(g_coeff(1.0, 1) == doctest::Approx(0.70323459923100461).epsilon(1e-14));
  CHECK(g_coeff(1.0, -1) == doctest::Approx(1.6188880495361362).epsilon(1e-14));
  CHECK(g_coeff(0.0, 1) == 0.0);
  CHECK_THROWS_AS(g_coeff(-0.1, 1), std::domain_error);
  CHECK_THROWS_AS(g_coeff(0.5, 0), std::invalid_argument);
}

TEST_CASE("g is smooth across evaluation switches") {
  for (int sm : {1, -1}) {
    for (double z0 : {1e-3, 0.5}) {
      const double below = g_coeff(std::nextafter(z0, 0.0), sm);
      const double above = g_coeff(std::nextafter(z0, 1.0), sm);
      CHECK(std::abs(above / below - 1) < 1e-13);
    }
  }
  // small-z limits
  CHECK(g_coeff(1e-6, 1) / 1e-6 == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(g_coeff(1e-6, -1) / 1e-6 == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("f is constant along the characteristic ODE") {
  for (int sm : {1, -1}) {
    for (double z0 : {0.3, 0.8, 1.5}) {
      // overtaking waves grow only where the mean depth decreases
      const double h1 = sm == 1 ? 0.6 : 2.0;
      const double z1 = integrate_ode_q(1.0, z0, h1, sm);
      const double q0 = q_exact(1.0, z0, sm);
      const double q1 = q_exact(h1, z1, sm);
      CHECK(std::abs(q1 / q0 - 1) < 1e-10);
    }
  }
}

TEST_CASE("f normalization and continuity") {
  CHECK(f_exact(0.0, 1) == 0.0);
  CHECK(std::abs(f_exact(1.0, -1)) < 1e-15);
  CHECK_THROWS_AS(f_exact(0.0, -1), std::domain_error);
  const double below = f_exact(std::nextafter(1e-3, 0.0), 1);
  const double above = f_exact(std::nextafter(1e-3, 1.0), 1);
  CHECK(std::abs(above / below - 1) < 1e-12);
  CHECK(f_fitting(0.0) == 0.0);
  CHECK_THROWS_AS(f_fitting(4.0), std::domain_error);
}

TEST_CASE("equal depths echo the incident amplitude") {
  for (int sm : {1, -1}) {
    const auto p = transmit(1.3, 1.3, 0.5, sm);
    REQUIRE(p.outcome == Outcome::Transmitted);
    CHECK(*p.z_plus == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("head-on transmission reference values") {
  CHECK(z2(transmit(1.5, 1.0, std::sqrt(0.2), -1)) == doctest::Approx(0.35489).epsilon(1e-4));
  CHECK(z2(transmit(1.5, 1.0, std::sqrt(0.4), -1)) == doctest::Approx(0.69828).epsilon(1e-4));
  CHECK(z2(transmit(1.5, 1.0, std::sqrt(0.8), -1)) == doctest::Approx(1.37720).epsilon(1e-4));
}

TEST_CASE("overtaking: trapping below z_min, transmission above") {
  const double zmin = z_min_exact(1.5);
  CHECK(zmin == doctest::Approx(1.0384432).epsilon(1e-6));
  CHECK(transmit(1.0, 1.5, std::sqrt(0.4), 1).outcome == Outcome::Trapped);
  CHECK(transmit(1.0, 1.5, std::sqrt(0.8), 1).outcome == Outcome::Trapped);
  CHECK_FALSE(transmit(1.0, 1.5, std::sqrt(0.4), 1).z_plus.has_value());
  const auto p = transmit(1.0, 1.5, std::sqrt(1.2), 1);
  REQUIRE(p.outcome == Outcome::Transmitted);
  CHECK(z2(p) == doctest::Approx(0.0689).epsilon(2e-3));
  CHECK(*p.a_plus == doctest::Approx(0.1033).epsilon(2e-3));
  CHECK_FALSE(p.physically_admissible);
  // the boundary case emits a vanishing wave
  const auto edge = transmit(1.0, 1.5, zmin * (1 + 1e-12), 1);
  CHECK(*edge.z_plus < 1e-4);
}

TEST_CASE("z_min reference values") {
  CHECK(z_min_exact(1.05) == doctest::Approx(0.3170085).epsilon(1e-6));
  CHECK(z_min_exact(1.2) == doctest::Approx(0.6405633).epsilon(1e-6));
  CHECK(z_min_exact(2.0) == doctest::Approx(1.5311113).epsilon(1e-6));
  CHECK(z_min_fitting(1.05) == doctest::Approx(0.3167617).epsilon(1e-6));
  CHECK(z_min_fitting(1.5) == doctest::Approx(0.9935465).epsilon(1e-6));
  CHECK(z_min_fitting(2.0) == doctest::Approx(1.3629448).epsilon(1e-6));
  CHECK_THROWS_AS(z_min_exact(1.0), std::domain_error);
}

TEST_CASE("transmission is reciprocal and independent of the invariant constant") {
  for (int sm : {1, -1}) {
    const auto fwd = transmit(1.0, 0.7, 0.6, sm);
    const auto back = transmit(0.7, 1.0, *fwd.z_plus, sm);
    CHECK(std::abs(*back.z_plus - 0.6) < 1e-12);
    auto base = exact_invariant(sm);
    LogInvariant shifted{[base](double z) { return base.f(z) + 3.7; }, sm, base.z_limit};
    const auto s = transmit_with(shifted, 1.0, 0.7, 0.6);
    CHECK(std::abs(*s.z_plus - *fwd.z_plus) < 1e-12);
  }
}

TEST_CASE("transmit errors") {
  CHECK_THROWS_AS(transmit(1.0, 1.5, 0.5, -1, {InvariantMethod::Fitting}), std::invalid_argument);
  CHECK_THROWS_AS(transmit(-1.0, 1.5, 0.5, 1), std::domain_error);
  CHECK_THROWS_AS(transmit(3.0, 1.0, 2.9, 1), RootNotBracketed);
  CHECK(transmit(1.0, 1.5, 0.0, 1).outcome == Outcome::NoInteraction);
  CHECK(parse_method("fitting") == InvariantMethod::Fitting);
  CHECK_THROWS_AS(parse_method("exactly"), std::invalid_argument);
}

TEST_CASE("DSW leading edge") {
  const double ref[4][2] = {{1.1, 0.2022221}, {1.2, 0.4103213}, {1.3, 0.6254421}, {1.4, 0.8480625}};
  for (const auto& r : ref) {
    const auto e = dsw_lead_amplitude(r[0], 1.0);
    CHECK(e.z_plus * e.z_plus == doctest::Approx(r[1]).epsilon(1e-6));
    CHECK(e.speed == doctest::Approx(std::sqrt(1 + e.a_plus)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(dsw_lead_amplitude(1.5, 1.0, InvariantMethod::Fitting), std::domain_error);
  CHECK_NOTHROW(dsw_lead_amplitude(1.43, 1.0, InvariantMethod::Fitting));
  CHECK_THROWS_AS(dsw_lead_amplitude(1.0, 1.2), std::domain_error);
  // scale invariance in h+
  const auto a = dsw_lead_amplitude(2.4, 2.0);
  const auto b = dsw_lead_amplitude(1.2, 1.0);
  CHECK(a.a_plus == doctest::Approx(2 * b.a_plus).epsilon(1e-12));
}

TEST_CASE("Riemann step and simple-wave fan") {
  const auto s = RiemannStep::simple(1.0, 1.5, 1);
  CHECK_NOTHROW(s.validate());
  CHECK(s.is_rarefaction());
  CHECK(s.u_minus == doctest::Approx(2 * (1 - std::sqrt(1.5))));
  const auto [l, r] = s.fan_edges();
  CHECK(l < r);
  const auto left = simple_wave_mean(l, s);
  const auto right = simple_wave_mean(r, s);
  CHECK(left.hbar == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(right.hbar == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(right.ubar == doctest::Approx(0.0).epsilon(1e-14));
  const auto mid = simple_wave_mean((l + r) / 2, s);
  const auto inv = ShallowWaterInvariants::of(mid);
  CHECK(inv.r_minus == doctest::Approx(s.carried_invariant()).epsilon(1e-14));
  CHECK(simple_wave_mean((l + r) / 2, 1.0, 1.5, 1, s.u_minus).hbar == doctest::Approx(mid.hbar));

  RiemannStep bad{1.0, 0.0, 1.5, 0.0, 1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(simple_wave_mean(0.0, RiemannStep::simple(1.5, 1.0, 1)), std::domain_error);
  CHECK_FALSE(RiemannStep::simple(1.5, 1.0, 1).is_rarefaction());
  CHECK(RiemannStep::simple(1.5, 1.0, -1).is_rarefaction());
}

TEST_CASE("soliton path agrees with the invariant relation") {
  SUBCASE("overtaking transmission") {
    const auto step = RiemannStep::simple(1.0, 1.5, 1);
    const auto path = soliton_path_through_rw(step, {std::sqrt(1.2), -20.0, 1});
    REQUIRE(path.prediction.outcome == Outcome::Transmitted);
    const auto p = transmit(1.0, 1.5, std::sqrt(1.2), 1);
    CHECK(std::abs(*path.prediction.z_plus - *p.z_plus) < 1e-7);
    CHECK(*path.t_exit > *path.t_enter);
    CHECK(path.points.back().x / path.points.back().t == doctest::Approx(step.fan_edges().second));
  }
  SUBCASE("head-on transmission") {
    const auto step = RiemannStep::simple(1.5, 1.0, -1);
    const auto path = soliton_path_through_rw(step, {std::sqrt(0.4), -10.0, 1});
    REQUIRE(path.prediction.outcome == Outcome::Transmitted);
    CHECK(std::abs(*path.prediction.z_plus - *transmit(1.5, 1.0, std::sqrt(0.4), -1).z_plus) < 1e-7);
  }
  SUBCASE("overtaking trapping") {
    const auto step = RiemannStep::simple(1.0, 1.5, 1);
    const auto path = soliton_path_through_rw(step, {std::sqrt(0.4), -20.0, 1});
    CHECK(path.prediction.outcome == Outcome::Trapped);
    REQUIRE(path.trap_xi.has_value());
    const double q = q_exact(1.0, std::sqrt(0.4), 1);
    CHECK(*path.trap_xi == doctest::Approx(step.characteristic_speed(q)));
    const auto last = path.points.back();
    CHECK(std::abs(last.x / last.t - *path.trap_xi) < 1e-3);
  }
  SUBCASE("no wave") {
    const auto path = soliton_path_through_rw(RiemannStep::simple(1.0, 1.5, 1), {0.0, -5.0, 1});
    CHECK(path.prediction.outcome == Outcome::NoInteraction);
  }
}

TEST_CASE("wave action pair: lambda = G_n / F_n") {
  for (double n : {0.1, 0.5, 0.8}) {
    for (double h : {0.6, 1.7}) {
      const double d = 1e-6;
      const auto p = wave_action_pair(n + d, h, 1);
      const auto m = wave_action_pair(n - d, h, 1);
      const double ratio = (p.G - m.G) / (p.F - m.F);
      const double a = n * h / (1 - n);
      CHECK(std::abs(ratio / (h * std::sqrt(h + a)) - 1) < 1e-6);
      CHECK(wave_action_pair(n, h, -1).lambda == doctest::Approx(-h * std::sqrt(h + a)));
    }
  }
  CHECK_THROWS_AS(wave_action_pair(1.0, 1.0, 1), std::domain_error);
}

TEST_CASE("amplitude form and z form agree") {
  for (int sigma : {1, -1}) {
    const double hbar = 1.2, ubar = 0.3, z = 0.7;
    const double a = hbar * z * z;
    const auto am = amplitude_form(hbar, ubar, a, sigma);
    const auto zs = solitonic_rhs(hbar, ubar, z, sigma);
    CHECK(am.c == doctest::Approx(zs.c_s).epsilon(1e-14));
    // a = hbar z^2 with hbar_t = -(ubar hbar)_x converts the amplitude form to the z form.
    const double hx = (z * z * (am.c - ubar) + am.coef_hx) / (2 * hbar * z);
    const double ux = (am.coef_ux - z * z * hbar) / (2 * hbar * z);
    CHECK(hx == doctest::Approx(zs.coef_hx).epsilon(1e-12));
    CHECK(ux == doctest::Approx(zs.coef_ux).epsilon(1e-12));
    CHECK(zs.v_plus - zs.v_minus == doctest::Approx(2 * std::sqrt(hbar)));
  }
}

TEST_CASE("simple-wave reduction of the z equation") {
  // On a simple wave ubar_x = mu hbar_x / sqrt(hbar): sigma g / sqrt(hbar) = coef_hx + mu coef_ux / sqrt(hbar).
  const double hbar = 1.3, z = 0.9;
  for (int sigma : {1, -1}) {
    for (int mu : {1, -1}) {
      const auto c = solitonic_rhs(hbar, 0.1, z, sigma);
      const double lhs = sigma * g_coeff(z, sigma * mu) / std::sqrt(hbar);
      CHECK(c.coef_hx + mu * c.coef_ux / std::sqrt(hbar) == doctest::Approx(lhs).epsilon(1e-13));
    }
  }
}

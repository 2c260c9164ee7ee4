#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "sgnlab/roots.hpp"
#include "sgnlab/solver.hpp"
#include "sgnlab/solver_io.hpp"
#include "sgnlab/waves.hpp"

using namespace sgnlab;
using Array = Eigen::ArrayXd;

namespace {

constexpr double kPi = std::numbers::pi;

Array centers(double x0, double dx, Eigen::Index n) {
  return x0 + (Array::LinSpaced(n, 0, double(n - 1)) + 0.5) * dx;
}

// L2 error of the periodic manufactured problem with h = 1 + 0.1 sin(kx), varpi = cos(kx).
double manufactured_error(Eigen::Index n) {
  const double L = 2.0, k = 2 * kPi / L, dx = L / double(n);
  const Array x = centers(0, dx, n);
  const Array h = 1 + 0.1 * (k * x).sin();
  const Array hx = 0.1 * k * (k * x).cos();
  const Array p = (k * x).cos();
  const Array px = -k * (k * x).sin();
  const Array pxx = -k * k * (k * x).cos();
  // -(p_x / h)_x + 3 p / h^3
  const Array rhs = -(pxx / h - px * hx / h.square()) + 3 * p / h.cube();
  const Array num = solve_varpi<double>(h, rhs, dx, BoundaryKind::Periodic, EllipticBoundary::ZeroFlux);
  return std::sqrt(((num - p).square().sum()) * dx);
}

GridState<double> soliton_state(double a, double ubar, double L, double dx, double x0) {
  const auto n = Eigen::Index(std::llround(L / dx));
  const Array x = centers(-L / 2, dx, n);
  const auto p = solitary_profile(SolitaryWave<double>{1.0, ubar, a, 1, x0}, x, 0.0);
  return GridState<double>::from_primitive(-L / 2, dx, p.h, p.u);
}

SolverConfig periodic_cfg(double t_end, Limiter lim = Limiter::Minmod) {
  SolverConfig c;
  c.bc = BoundaryKind::Periodic;
  c.t_end = t_end;
  c.limiter = lim;
  return c;
}

}  // namespace

TEST_CASE("elliptic manufactured solution converges at second order") {
  const double e1 = manufactured_error(50), e2 = manufactured_error(100), e3 = manufactured_error(200);
  const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
  CHECK(p1 == doctest::Approx(2.0).epsilon(0.05));
  CHECK(p2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("elliptic closures") {
  // Uniform flow at rest: varpi vanishes for either closure.
  const Array h = Array::Constant(20, 1.3);
  const Array u = Array::Constant(20, 0.4);
  for (auto ebc : {EllipticBoundary::ZeroFlux, EllipticBoundary::ZeroValue}) {
    const Array rhs = elliptic_rhs<double>(h, u, 0.1, BoundaryKind::Outflow);
    const Array p = solve_varpi<double>(h, rhs, 0.1, BoundaryKind::Outflow, ebc);
    CHECK(p.abs().maxCoeff() == 0.0);
  }
  // Constant forcing on constant depth: zero-flux gives the uniform solution h^3 f / 3.
  const Array f = Array::Constant(20, 0.6);
  const Array p = solve_varpi<double>(h, f, 0.1, BoundaryKind::Outflow, EllipticBoundary::ZeroFlux);
  CHECK((p - std::pow(1.3, 3) * 0.6 / 3).abs().maxCoeff() < 1e-14);
  const Array q = solve_varpi<double>(h, f, 0.1, BoundaryKind::Outflow, EllipticBoundary::ZeroValue);
  CHECK(std::abs(q[0]) < 0.5 * std::abs(q[10]));
}

TEST_CASE("uniform flow is preserved exactly") {
  for (auto bc : {BoundaryKind::Outflow, BoundaryKind::Periodic}) {
    SolverConfig c;
    c.bc = bc;
    c.t_end = 2.0;
    const auto s0 = GridState<double>::from_primitive(0.0, 0.1, Array::Constant(40, 1.3),
                                                      Array::Constant(40, 0.4));
    const auto r = run(s0, c, {});
    CHECK((r.final_state.h - 1.3).abs().maxCoeff() < 1e-14);
    CHECK((r.final_state.hu - 1.3 * 0.4).abs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("periodic mass and momentum are conserved to round-off") {
  const auto s0 = soliton_state(0.3, 0.1, 40, 0.1, 0);
  const auto c = periodic_cfg(5.0);
  const auto ref = conserved_totals(s0, c.bc);
  const auto r = run(s0, c, {});
  const auto rep = conservation_report(conserved_totals(r.final_state, c.bc), ref);
  CHECK(std::abs(rep.drift.mass) < 1e-13);
  CHECK(std::abs(rep.drift.momentum) < 1e-12);
  CHECK(std::abs(rep.drift.energy) < 1e-4);
}

TEST_CASE("solitary wave grid convergence") {
  const double a = 0.3, T = 5;
  const SolitaryWave<double> w{1.0, 0.0, a, 1, 0.0};
  double err[3];
  const double dxs[3] = {1.0 / 25, 1.0 / 50, 1.0 / 100};
  for (int k = 0; k < 3; ++k) {
    const auto r = run(soliton_state(a, 0, 60, dxs[k], 0), periodic_cfg(T), {});
    const Array x = r.final_state.centers();
    const auto exact = solitary_profile(w, x, T);
    err[k] = (r.final_state.h - exact.h).abs().maxCoeff();
  }
  CHECK(std::log2(err[0] / err[1]) >= 1.8);
  CHECK(std::log2(err[1] / err[2]) >= 1.8);
}

TEST_CASE("smooth rarefaction follows the shallow-water characteristics") {
  // Simple wave u - 2 sqrt(h) = r; h is constant along x = x0 + (r + 3 sqrt(h)) t.
  const double hl = 1.0, hr = 1.5, width = 40, T = 40;
  const double r = -2 * std::sqrt(hl);
  const auto h0 = [&](double x) { return hl + (hr - hl) * 0.5 * (1 + std::tanh(x / width)); };
  const double dx = 0.5, x0 = -600;
  const Eigen::Index n = 2400;
  const Array x = centers(x0, dx, n);
  const Array h = x.unaryExpr(h0);
  const Array u = r + 2 * h.sqrt();
  SolverConfig c;
  c.t_end = T;
  const auto res = run(GridState<double>::from_primitive(x0, dx, h, u), c, {});
  double worst = 0;
  for (Eigen::Index i = 0; i < n; i += 10) {
    const double xi = x[i];
    if (std::abs(xi) > 300) continue;
    const double foot = find_root([&](double y) { return y + (r + 3 * std::sqrt(h0(y))) * T - xi; },
                                  xi - 200, xi + 200, 1e-13).root;
    worst = std::max(worst, std::abs(res.final_state.h[i] - h0(foot)));
  }
  CHECK(worst < 2e-4);
}

TEST_CASE("linear standing wave oscillates at the dispersive frequency") {
  const double k = 1.0, eps = 1e-4, T = 10;
  const Eigen::Index n = 256;
  const double L = 2 * kPi / k, dx = L / double(n);
  const Array x = centers(0, dx, n);
  const Array h = 1 + eps * (k * x).cos();
  const auto r = run(GridState<double>::from_primitive(0.0, dx, h, Array::Zero(n)),
                     periodic_cfg(T, Limiter::None), {});
  const double proj = 2 * ((r.final_state.h - 1) * (k * x).cos()).sum() / double(n);
  const double omega = k / std::sqrt(1 + k * k / 3);
  CHECK(proj == doctest::Approx(eps * std::cos(omega * T)).epsilon(0.01));
  CHECK(std::abs(proj - eps * std::cos(k * T)) > 0.1 * eps);
}

TEST_CASE("Galilean shift of a solitary wave") {
  const double a = 0.3, U = 0.3, T = 10;
  const auto c = periodic_cfg(T);
  const auto r0 = run(soliton_state(a, 0, 80, 0.05, -10), c, {});
  const auto r1 = run(soliton_state(a, U, 80, 0.05, -10), c, {});
  const auto c0 = find_crest(r0.final_state, -40.0, 40.0);
  const auto c1 = find_crest(r1.final_state, -40.0, 40.0);
  CHECK(c1.x - c0.x == doctest::Approx(U * T).epsilon(2e-3));
  CHECK(c1.h == doctest::Approx(c0.h).epsilon(1e-3));
}

TEST_CASE("runs are deterministic") {
  const auto s0 = soliton_state(0.4, 0, 30, 0.1, 0);
  const auto c = periodic_cfg(3.0);
  const auto a = run(s0, c, {});
  const auto b = run(s0, c, {});
  CHECK((a.final_state.h == b.final_state.h).all());
  CHECK((a.final_state.hu == b.final_state.hu).all());
  CHECK(a.steps == b.steps);
}

TEST_CASE("zero-length run leaves the state untouched") {
  const auto s0 = soliton_state(0.4, 0, 30, 0.1, 0);
  const auto r = run(s0, periodic_cfg(0.0), {});
  CHECK(r.steps == 0);
  CHECK((r.final_state.h == s0.h).all());
}

TEST_CASE("snapshots land on the requested times") {
  auto c = periodic_cfg(1.0);
  c.output_every = 0.25;
  std::vector<double> seen;
  RunHooks<double> hooks;
  hooks.on_snapshot = [&](const GridState<double>& s) { seen.push_back(s.t); };
  const auto r = run(soliton_state(0.2, 0, 30, 0.1, 0), c, {}, hooks);
  REQUIRE(seen.size() == 5);
  for (int k = 0; k < 5; ++k) CHECK(seen[k] == doctest::Approx(0.25 * k).epsilon(1e-14));
  CHECK(r.snapshot_times == seen);
}

TEST_CASE("probes sample at the requested interval") {
  auto c = periodic_cfg(2.0);
  RunHooks<double> hooks;
  hooks.probe_every = 0.5;
  const auto r = run(soliton_state(0.2, 0, 30, 0.1, 0), c,
                     {probes::crest_height<double>(), probes::mass<double>(c.bc)}, hooks);
  REQUIRE(r.series.names.size() == 2);
  CHECK(r.series.t.front() == 0.0);
  CHECK(r.series.t.back() == 2.0);
  CHECK(r.series.t.size() >= 5);
  CHECK(r.series.values.back()[1] == doctest::Approx(r.series.values.front()[1]).epsilon(1e-13));
}

TEST_CASE("loss of positivity aborts with the partial run") {
  // Cell-scale depth and velocity oscillations at a CFL beyond the positivity bound.
  const Eigen::Index n = 100;
  Array h(n), u(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h[i] = (i % 2) ? 1.0 : 1e-4;
    u[i] = (i % 3 == 0) ? 8.0 : -8.0;
  }
  SolverConfig c;
  c.t_end = 2;
  c.cfl = 0.99;
  c.max_halvings = 2;
  try {
    run(GridState<double>::from_primitive(0.0, 0.1, h, u), c, {});
    FAIL("expected RunAborted");
  } catch (const RunAborted<double>& e) {
    CHECK((e.partial.final_state.h > 0).all());
    CHECK(e.partial.final_state.t < 2);
    CHECK(std::string(e.what()).find("positivity") != std::string::npos);
  }
}

TEST_CASE("input validation") {
  SolverConfig c;
  c.cfl = 1.2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  const auto s0 = soliton_state(0.2, 0, 10, 0.1, 0);
  SolverConfig ok;
  CHECK_THROWS_AS(hyperbolic_step(s0, 10.0, ok), std::invalid_argument);
  auto bad = s0;
  bad.h[3] = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(parse_limiter("none") == Limiter::None);
  CHECK(parse_boundary("periodic") == BoundaryKind::Periodic);
  CHECK(parse_elliptic_boundary("zero_value") == EllipticBoundary::ZeroValue);
  CHECK_THROWS(parse_limiter("superbee"));
}

TEST_CASE("snapshot and probe files") {
  const auto dir = std::filesystem::temp_directory_path() / "sgnlab_test_solver_io";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto s = soliton_state(0.2, 0, 1, 0.25, 0);
  s.t = 1.5;
  const auto path = write_snapshot(s, dir);
  CHECK(path.filename() == "snap_t1.500000.csv");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,h,u,varpi");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
  CHECK(format_number(0.1) == "0.10000000000000001");
  std::filesystem::remove_all(dir);
}

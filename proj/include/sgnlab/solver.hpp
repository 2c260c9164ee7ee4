// Finite-volume solver for the SGN equations in the form
//
//   h_t + (hu)_x = 0,   (hu)_t + (hu^2 + h^2/2)_x = -varpi_x,
//   -(h^3/3) (varpi_x / h)_x + varpi = (2/3) h^3 u_x^2 + (h^3/3) h_xx,
//
// advanced with MUSCL-HLL for the hyperbolic part and a tridiagonal
// solve for varpi at every Runge-Kutta stage.
#ifndef SGNLAB_SOLVER_HPP
#define SGNLAB_SOLVER_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgnlab/tridiagonal.hpp"

namespace sgnlab {

enum class Limiter { Minmod, None };
enum class BoundaryKind { Outflow, Periodic };
enum class EllipticBoundary { ZeroFlux, ZeroValue };

std::string to_string(Limiter l);
std::string to_string(BoundaryKind b);
std::string to_string(EllipticBoundary b);
Limiter parse_limiter(const std::string& s);
BoundaryKind parse_boundary(const std::string& s);
EllipticBoundary parse_elliptic_boundary(const std::string& s);

struct SolverConfig {
  double cfl = 0.45;
  Limiter limiter = Limiter::Minmod;
  BoundaryKind bc = BoundaryKind::Outflow;
  double t_end = 0.0;
  EllipticBoundary elliptic_bc = EllipticBoundary::ZeroFlux;
  /// Snapshot interval; 0 disables snapshots.
  double output_every = 0.0;
  /// Positivity retries: the step is split in halves at most this many times.
  int max_halvings = 6;

  void validate() const {
    if (!(cfl > 0 && cfl < 1)) throw std::invalid_argument("solver: cfl must lie in (0, 1)");
    if (!(t_end >= 0)) throw std::invalid_argument("solver: t_end must be non-negative");
    if (!(output_every >= 0)) throw std::invalid_argument("solver: output_every must be non-negative");
    if (max_halvings < 0) throw std::invalid_argument("solver: max_halvings must be non-negative");
  }
};

template <typename Scalar>
struct GridState {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Scalar x0 = 0;  ///< left edge of the first cell
  Scalar dx = 1;
  Array h;
  Array hu;
  Array varpi;
  Scalar t = 0;

  Eigen::Index n_cells() const { return h.size(); }
  Scalar x(Eigen::Index i) const { return x0 + (Scalar(i) + Scalar(0.5)) * dx; }
  Scalar length() const { return dx * Scalar(n_cells()); }
  Array centers() const {
    return x0 + (Array::LinSpaced(n_cells(), 0, Scalar(n_cells() - 1)) + Scalar(0.5)) * dx;
  }
  Array velocity() const { return hu / h; }

  void validate() const {
    if (!(dx > 0)) throw std::invalid_argument("grid: dx must be positive");
    if (h.size() < 3) throw std::invalid_argument("grid: need at least 3 cells");
    if (hu.size() != h.size() || varpi.size() != h.size()) {
      throw std::invalid_argument("grid: h, hu and varpi must have equal length");
    }
    if (!(h > 0).all()) throw std::invalid_argument("grid: depth must be positive everywhere");
    if (!h.allFinite() || !hu.allFinite()) throw std::invalid_argument("grid: non-finite values");
  }

  template <typename DH, typename DU>
  static GridState from_primitive(Scalar x0, Scalar dx, const Eigen::ArrayBase<DH>& h,
                                  const Eigen::ArrayBase<DU>& u, Scalar t = 0) {
    GridState s;
    s.x0 = x0;
    s.dx = dx;
    s.h = h;
    s.hu = h * u;
    s.varpi = Array::Zero(h.size());
    s.t = t;
    return s;
  }
};

/// Thrown when positivity cannot be restored by step halving.
template <typename Scalar>
class PositivityError : public std::runtime_error {
 public:
  PositivityError(const std::string& what, GridState<Scalar> last_valid)
      : std::runtime_error(what), state(std::move(last_valid)) {}
  GridState<Scalar> state;
};

namespace detail {

inline constexpr int kGhost = 2;

/// Copies `v` into `ext` (size n + 4) and fills two ghost cells per side.
/// parity = -1 mirrors with a sign flip (zero face value).
template <typename Scalar, typename Derived>
void fill_ghosts(const Eigen::ArrayBase<Derived>& v, Eigen::Array<Scalar, Eigen::Dynamic, 1>& ext,
                 bool periodic, Scalar parity = 1) {
  const Eigen::Index n = v.size();
  ext.resize(n + 2 * kGhost);
  ext.segment(kGhost, n) = v;
  if (periodic) {
    ext[0] = v[n - 2];
    ext[1] = v[n - 1];
    ext[n + 2] = v[0];
    ext[n + 3] = v[1];
  } else if (parity > 0) {
    ext[0] = ext[1] = v[0];
    ext[n + 2] = ext[n + 3] = v[n - 1];
  } else {
    ext[1] = -v[0];
    ext[0] = -v[1];
    ext[n + 2] = -v[n - 1];
    ext[n + 3] = -v[n - 2];
  }
}

template <typename Scalar>
Scalar minmod(Scalar a, Scalar b) {
  if (a * b <= 0) return 0;
  return std::abs(a) < std::abs(b) ? a : b;
}

}  // namespace detail

/// Right-hand side 2 u_x^2 + h_xx of the symmetric form of the varpi equation.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> elliptic_rhs(
    const Eigen::Array<Scalar, Eigen::Dynamic, 1>& h, const Eigen::Array<Scalar, Eigen::Dynamic, 1>& u,
    Scalar dx, BoundaryKind bc) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const bool periodic = bc == BoundaryKind::Periodic;
  Array he, ue;
  detail::fill_ghosts(h, he, periodic);
  detail::fill_ghosts(u, ue, periodic);
  const Eigen::Index n = h.size();
  const auto c = Eigen::seqN(2, n);
  const auto l = Eigen::seqN(1, n);
  const auto r = Eigen::seqN(3, n);
  const Array ux = (ue(r) - ue(l)) / (2 * dx);
  return 2 * ux.square() + (he(r) - 2 * he(c) + he(l)) / (dx * dx);
}

/// Solves -(varpi_x / h)_x + 3 varpi / h^3 = rhs on cell centres.
///
/// The system is the original equation divided by h^3 / 3; it is symmetric
/// and strictly diagonally dominant for h > 0.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> solve_varpi(
    const Eigen::Array<Scalar, Eigen::Dynamic, 1>& h,
    const Eigen::Array<Scalar, Eigen::Dynamic, 1>& rhs, Scalar dx, BoundaryKind bc,
    EllipticBoundary ebc) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = h.size();
  const bool periodic = bc == BoundaryKind::Periodic;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> he;
  detail::fill_ghosts(h, he, periodic);
  Tridiagonal<Scalar> m(n);
  const Scalar inv_dx2 = 1 / (dx * dx);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar wl = 2 * inv_dx2 / (he[i + 1] + he[i + 2]);
    const Scalar wr = 2 * inv_dx2 / (he[i + 2] + he[i + 3]);
    m.lower[i] = -wl;
    m.upper[i] = -wr;
    m.diag[i] = wl + wr + 3 / (h[i] * h[i] * h[i]);
  }
  if (!periodic) {
    // Ghost closure: varpi_{-1} = +-varpi_0 folds the outer coupling into the diagonal.
    const Scalar s = ebc == EllipticBoundary::ZeroFlux ? Scalar(1) : Scalar(-1);
    m.diag[0] += s * m.lower[0];
    m.diag[n - 1] += s * m.upper[n - 1];
    m.lower[0] = 0;
    m.upper[n - 1] = 0;
  }
  m.check_dominance(periodic);
  const Vector b = rhs.matrix();
  const Vector x = periodic ? cyclic_solve(m, b) : thomas_solve(m, b);
  return x.array();
}

template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> elliptic_solve(const GridState<Scalar>& s,
                                                       const SolverConfig& cfg) {
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> u = s.velocity();
  return solve_varpi<Scalar>(s.h, elliptic_rhs<Scalar>(s.h, u, s.dx, cfg.bc), s.dx, cfg.bc,
                             cfg.elliptic_bc);
}

/// Largest stable step cfl dx / max(|u| + sqrt(h)).
template <typename Scalar>
Scalar stable_dt(const GridState<Scalar>& s, const SolverConfig& cfg) {
  const Scalar speed = ((s.hu / s.h).abs() + s.h.sqrt()).maxCoeff();
  return Scalar(cfg.cfl) * s.dx / speed;
}

/// Reusable workspace for the semi-discrete operator and the SSP-RK2 step.
template <typename Scalar>
class SgnStepper {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  explicit SgnStepper(SolverConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  const SolverConfig& config() const { return cfg_; }

  /// Time derivatives of (h, hu); also refreshes varpi for this state.
  void rate(const Array& h, const Array& hu, Scalar dx, Array& dh, Array& dhu, Array& varpi) {
    const Eigen::Index n = h.size();
    const bool periodic = cfg_.bc == BoundaryKind::Periodic;
    u_ = hu / h;
    detail::fill_ghosts(h, he_, periodic);
    detail::fill_ghosts(u_, ue_, periodic);
    solve_elliptic(h, dx, periodic, varpi);
    const Scalar wall = (!periodic && cfg_.elliptic_bc == EllipticBoundary::ZeroValue) ? -1 : 1;
    detail::fill_ghosts(varpi, pe_, periodic, wall);

    // Limited slopes on extended cells 1 .. n + 2.
    sh_.resize(n + 2 * detail::kGhost);
    su_.resize(n + 2 * detail::kGhost);
    const bool limited = cfg_.limiter == Limiter::Minmod;
    for (Eigen::Index j = 1; j <= n + 2; ++j) {
      if (limited) {
        sh_[j] = detail::minmod(he_[j] - he_[j - 1], he_[j + 1] - he_[j]);
        su_[j] = detail::minmod(ue_[j] - ue_[j - 1], ue_[j + 1] - ue_[j]);
      } else {
        sh_[j] = (he_[j + 1] - he_[j - 1]) / 2;
        su_[j] = (ue_[j + 1] - ue_[j - 1]) / 2;
      }
    }
    fh_.resize(n + 1);
    fhu_.resize(n + 1);
    for (Eigen::Index f = 0; f <= n; ++f) {
      // face between extended cells j and j + 1
      const Eigen::Index j = f + 1;
      Scalar hl = he_[j] + sh_[j] / 2, hr = he_[j + 1] - sh_[j + 1] / 2;
      Scalar ul = ue_[j] + su_[j] / 2, ur = ue_[j + 1] - su_[j + 1] / 2;
      if (!(hl > 0 && hr > 0)) {
        hl = he_[j];
        hr = he_[j + 1];
        ul = ue_[j];
        ur = ue_[j + 1];
      }
      hll_flux(hl, ul, hr, ur, fh_[f], fhu_[f]);
    }
    dh.resize(n);
    dhu.resize(n);
    const Scalar inv_dx = 1 / dx;
    for (Eigen::Index i = 0; i < n; ++i) {
      dh[i] = -(fh_[i + 1] - fh_[i]) * inv_dx;
      dhu[i] = -(fhu_[i + 1] - fhu_[i]) * inv_dx - (pe_[i + 3] - pe_[i + 1]) * (inv_dx / 2);
    }
  }

  /// One SSP-RK2 step of size dt; returns false (state untouched) on loss of positivity.
  bool try_step(GridState<Scalar>& s, Scalar dt) {
    rate(s.h, s.hu, s.dx, k_h_, k_hu_, s.varpi);
    h1_ = s.h + dt * k_h_;
    hu1_ = s.hu + dt * k_hu_;
    if (!admissible(h1_, hu1_)) return false;
    rate(h1_, hu1_, s.dx, k_h_, k_hu_, p1_);
    h2_ = (s.h + h1_ + dt * k_h_) / 2;
    hu2_ = (s.hu + hu1_ + dt * k_hu_) / 2;
    if (!admissible(h2_, hu2_)) return false;
    s.h.swap(h2_);
    s.hu.swap(hu2_);
    s.t += dt;
    return true;
  }

  /// Advances by dt, splitting into halves on positivity failure.
  void step(GridState<Scalar>& s, Scalar dt) { step_split(s, dt, 0); }

  /// Recomputes varpi for the current (h, hu).
  void refresh_varpi(GridState<Scalar>& s) {
    u_ = s.hu / s.h;
    s.varpi = solve_varpi<Scalar>(s.h, elliptic_rhs<Scalar>(s.h, u_, s.dx, cfg_.bc), s.dx,
                                  cfg_.bc, cfg_.elliptic_bc);
  }

 private:
  // Same discretization as solve_varpi, reusing he_ / ue_ and member storage.
  void solve_elliptic(const Array& h, Scalar dx, bool periodic, Array& varpi) {
    const Eigen::Index n = h.size();
    const Scalar inv_dx2 = 1 / (dx * dx);
    const Scalar inv_2dx = 1 / (2 * dx);
    face_w_.resize(n + 1);
    for (Eigen::Index f = 0; f <= n; ++f) face_w_[f] = 2 * inv_dx2 / (he_[f + 1] + he_[f + 2]);
    if (periodic) {
      Tridiagonal<Scalar> m(n);
      Vector b(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = i + 2;
        const Scalar ux = (ue_[j + 1] - ue_[j - 1]) * inv_2dx;
        b[i] = 2 * ux * ux + (he_[j + 1] - 2 * he_[j] + he_[j - 1]) * inv_dx2;
        m.lower[i] = -face_w_[i];
        m.upper[i] = -face_w_[i + 1];
        m.diag[i] = face_w_[i] + face_w_[i + 1] + 3 / (h[i] * h[i] * h[i]);
      }
      varpi = cyclic_solve(m, b).array();
      return;
    }
    // Thomas sweep fused with assembly; the ghost closure folds into the end diagonals.
    const Scalar s = cfg_.elliptic_bc == EllipticBoundary::ZeroFlux ? Scalar(1) : Scalar(-1);
    cprime_.resize(n);
    varpi.resize(n);
    Scalar prev_c = 0, prev_x = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index j = i + 2;
      const Scalar ux = (ue_[j + 1] - ue_[j - 1]) * inv_2dx;
      const Scalar rhs = 2 * ux * ux + (he_[j + 1] - 2 * he_[j] + he_[j - 1]) * inv_dx2;
      const Scalar lo = i == 0 ? Scalar(0) : -face_w_[i];
      const Scalar up = i == n - 1 ? Scalar(0) : -face_w_[i + 1];
      Scalar d = face_w_[i] + face_w_[i + 1] + 3 / (h[i] * h[i] * h[i]);
      if (i == 0) d -= s * face_w_[0];
      if (i == n - 1) d -= s * face_w_[n];
      if (!(d >= std::abs(lo) + std::abs(up) && d > 0)) {
        throw TridiagonalError("elliptic assembly lost diagonal dominance at cell " + std::to_string(i));
      }
      const Scalar beta = d - lo * prev_c;
      prev_c = up / beta;
      prev_x = (rhs - lo * prev_x) / beta;
      cprime_[i] = prev_c;
      varpi[i] = prev_x;
    }
    for (Eigen::Index i = n - 2; i >= 0; --i) varpi[i] -= cprime_[i] * varpi[i + 1];
  }

  static bool admissible(const Array& h, const Array& hu) {
    return (h > 0).all() && h.allFinite() && hu.allFinite();
  }

  static void hll_flux(Scalar hl, Scalar ul, Scalar hr, Scalar ur, Scalar& fh, Scalar& fhu) {
    const Scalar cl = std::sqrt(hl), cr = std::sqrt(hr);
    const Scalar sl = std::min(ul - cl, ur - cr);
    const Scalar sr = std::max(ul + cl, ur + cr);
    const Scalar qh_l = hl * ul, qh_r = hr * ur;
    const Scalar fl_h = qh_l, fr_h = qh_r;
    const Scalar fl_q = qh_l * ul + hl * hl / 2, fr_q = qh_r * ur + hr * hr / 2;
    if (sl >= 0) {
      fh = fl_h;
      fhu = fl_q;
    } else if (sr <= 0) {
      fh = fr_h;
      fhu = fr_q;
    } else {
      const Scalar inv = 1 / (sr - sl);
      fh = (sr * fl_h - sl * fr_h + sl * sr * (hr - hl)) * inv;
      fhu = (sr * fl_q - sl * fr_q + sl * sr * (qh_r - qh_l)) * inv;
    }
  }

  void step_split(GridState<Scalar>& s, Scalar dt, int depth) {
    if (try_step(s, dt)) return;
    if (depth >= cfg_.max_halvings) {
      throw PositivityError<Scalar>("solver: depth lost positivity at t = " + std::to_string(double(s.t)) +
                                        " after " + std::to_string(depth) + " step halvings",
                                    s);
    }
    step_split(s, dt / 2, depth + 1);
    step_split(s, dt / 2, depth + 1);
  }

  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SolverConfig cfg_;
  Array u_, he_, ue_, pe_, sh_, su_, fh_, fhu_, face_w_, cprime_;
  Array k_h_, k_hu_, h1_, hu1_, h2_, hu2_, p1_;
};

/// One SSP-RK2 step with positivity retries; the state's varpi is refreshed on return.
template <typename Scalar>
GridState<Scalar> hyperbolic_step(const GridState<Scalar>& state, Scalar dt,
                                  const SolverConfig& cfg) {
  state.validate();
  if (!(dt > 0)) throw std::invalid_argument("hyperbolic_step: dt must be positive");
  if (dt > stable_dt(state, cfg) * (1 + 1e-12)) {
    throw std::invalid_argument("hyperbolic_step: dt exceeds the CFL bound");
  }
  SgnStepper<Scalar> stepper(cfg);
  GridState<Scalar> out = state;
  stepper.step(out, dt);
  stepper.refresh_varpi(out);
  return out;
}

template <typename Scalar>
struct ConservedTotals {
  Scalar mass = 0;
  Scalar momentum = 0;
  Scalar energy = 0;
};

template <typename Scalar>
struct ConservationReport {
  ConservedTotals<Scalar> totals;
  /// Signed drift relative to the reference; absolute when the reference vanishes.
  ConservedTotals<Scalar> drift;
};

/// Sums of h, hu and h (h + u^2 + h^2 u_x^2 / 3) / 2. Periodic grids use the
/// plain cell sum; open grids use trapezoid weights on the cell centres.
template <typename Scalar>
ConservedTotals<Scalar> conserved_totals(const GridState<Scalar>& s, BoundaryKind bc) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = s.n_cells();
  const bool periodic = bc == BoundaryKind::Periodic;
  const Array u = s.velocity();
  Array ue;
  detail::fill_ghosts(u, ue, periodic);
  const Array ux = (ue.segment(3, n) - ue.segment(1, n)) / (2 * s.dx);
  const Array e = s.h * (s.h + u.square() + s.h.square() * ux.square() / 3) / 2;
  Array w = Array::Constant(n, s.dx);
  if (!periodic) {
    w[0] /= 2;
    w[n - 1] /= 2;
  }
  return {(w * s.h).sum(), (w * s.hu).sum(), (w * e).sum()};
}

template <typename Scalar>
ConservationReport<Scalar> conservation_report(const ConservedTotals<Scalar>& now,
                                               const ConservedTotals<Scalar>& ref) {
  const auto rel = [](Scalar a, Scalar b) {
    return std::abs(b) > std::numeric_limits<Scalar>::min() ? (a - b) / std::abs(b) : a - b;
  };
  return {now, {rel(now.mass, ref.mass), rel(now.momentum, ref.momentum), rel(now.energy, ref.energy)}};
}

template <typename Scalar>
struct Crest {
  Scalar x = 0;
  Scalar h = 0;
  Eigen::Index index = -1;
};

/// Highest point of h in [x_lo, x_hi], refined by a parabola through three cells.
template <typename Scalar>
Crest<Scalar> find_crest(const GridState<Scalar>& s, Scalar x_lo, Scalar x_hi) {
  const Eigen::Index n = s.n_cells();
  const auto index = [&](Scalar x) {
    return Eigen::Index(std::clamp<Scalar>((x - s.x0) / s.dx - Scalar(0.5), -1, Scalar(n)));
  };
  const Eigen::Index lo = std::max<Eigen::Index>(index(x_lo) + 1, 0);
  const Eigen::Index hi = std::min<Eigen::Index>(index(x_hi), n - 1);
  if (hi < lo) return {};
  Eigen::Index k;
  s.h.segment(lo, hi - lo + 1).maxCoeff(&k);
  k += lo;
  Crest<Scalar> c{s.x(k), s.h[k], k};
  if (k > 0 && k < n - 1) {
    const Scalar a = s.h[k - 1], b = s.h[k], d = s.h[k + 1];
    const Scalar curv = a - 2 * b + d;
    if (curv < 0) {
      const Scalar off = (a - d) / (2 * curv);
      c.x += off * s.dx;
      c.h = b - (a - d) * off / 4;
    }
  }
  return c;
}

template <typename Scalar>
struct Probe {
  std::string name;
  std::function<Scalar(const GridState<Scalar>&)> eval;
};

namespace probes {

template <typename Scalar>
Probe<Scalar> crest_position(Scalar x_lo = -std::numeric_limits<Scalar>::infinity(),
                             Scalar x_hi = std::numeric_limits<Scalar>::infinity(),
                             std::string name = "crest_x") {
  return {std::move(name), [=](const GridState<Scalar>& s) { return find_crest(s, x_lo, x_hi).x; }};
}

template <typename Scalar>
Probe<Scalar> crest_height(Scalar x_lo = -std::numeric_limits<Scalar>::infinity(),
                           Scalar x_hi = std::numeric_limits<Scalar>::infinity(),
                           std::string name = "crest_h") {
  return {std::move(name), [=](const GridState<Scalar>& s) { return find_crest(s, x_lo, x_hi).h; }};
}

template <typename Scalar>
Probe<Scalar> mass(BoundaryKind bc) {
  return {"mass", [=](const GridState<Scalar>& s) { return conserved_totals(s, bc).mass; }};
}

template <typename Scalar>
Probe<Scalar> momentum(BoundaryKind bc) {
  return {"momentum", [=](const GridState<Scalar>& s) { return conserved_totals(s, bc).momentum; }};
}

template <typename Scalar>
Probe<Scalar> energy(BoundaryKind bc) {
  return {"energy", [=](const GridState<Scalar>& s) { return conserved_totals(s, bc).energy; }};
}

}  // namespace probes

template <typename Scalar>
struct ProbeSeries {
  std::vector<std::string> names;
  std::vector<Scalar> t;
  std::vector<std::vector<Scalar>> values;  ///< values[k][j]: probe j at t[k]
};

template <typename Scalar>
struct RunResult {
  GridState<Scalar> final_state;
  ProbeSeries<Scalar> series;
  std::vector<Scalar> snapshot_times;
  long steps = 0;
};

template <typename Scalar>
struct RunHooks {
  /// Called at t = 0, every output_every, and at t_end when snapshots are enabled.
  std::function<void(const GridState<Scalar>&)> on_snapshot;
  /// Probe sampling interval; 0 samples after every step.
  Scalar probe_every = 0;
  /// Called after every accepted step; may modify the state (e.g. regrid).
  std::function<void(GridState<Scalar>&)> after_step;
};

/// Run that stopped early; carries everything recorded so far.
template <typename Scalar>
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, RunResult<Scalar> partial_result)
      : std::runtime_error(what), partial(std::move(partial_result)) {}
  RunResult<Scalar> partial;
};

template <typename Scalar>
RunResult<Scalar> run(const GridState<Scalar>& initial, const SolverConfig& cfg,
                      const std::vector<Probe<Scalar>>& probe_list, const RunHooks<Scalar>& hooks = {}) {
  cfg.validate();
  initial.validate();
  SgnStepper<Scalar> stepper(cfg);
  RunResult<Scalar> res;
  res.final_state = initial;
  auto& s = res.final_state;
  stepper.refresh_varpi(s);
  for (const auto& p : probe_list) res.series.names.push_back(p.name);

  const auto sample = [&] {
    std::vector<Scalar> row;
    row.reserve(probe_list.size());
    for (const auto& p : probe_list) row.push_back(p.eval(s));
    res.series.t.push_back(s.t);
    res.series.values.push_back(std::move(row));
  };
  const auto snapshot = [&] {
    res.snapshot_times.push_back(s.t);
    if (hooks.on_snapshot) hooks.on_snapshot(s);
  };

  const Scalar t_end = Scalar(cfg.t_end);
  const Scalar out_dt = Scalar(cfg.output_every);
  const bool snapshots = out_dt > 0;
  long next_out = 1;
  Scalar next_probe = s.t + hooks.probe_every;
  sample();
  if (snapshots) snapshot();

  const Scalar tiny = 1e-12 * std::max(Scalar(1), std::abs(t_end));
  try {
    while (s.t < t_end - tiny) {
      Scalar dt = std::min(stable_dt(s, cfg), t_end - s.t);
      bool hits_output = false;
      if (snapshots) {
        const Scalar t_out = initial.t + Scalar(next_out) * out_dt;
        if (t_out <= s.t + dt + tiny && t_out < t_end - tiny) {
          dt = t_out - s.t;
          hits_output = true;
        }
      }
      stepper.step(s, dt);
      ++res.steps;
      if (hits_output) {
        s.t = initial.t + Scalar(next_out) * out_dt;
        ++next_out;
      }
      if (s.t >= t_end - tiny) s.t = t_end;
      if (hooks.after_step) hooks.after_step(s);
      if (hits_output || s.t == t_end) stepper.refresh_varpi(s);
      if (s.t >= next_probe || s.t == t_end) {
        sample();
        next_probe = s.t + hooks.probe_every;
      }
      if (hits_output) snapshot();
    }
  } catch (const PositivityError<Scalar>& e) {
    res.final_state = e.state;
    throw RunAborted<Scalar>(e.what(), std::move(res));
  }
  if (snapshots && (res.snapshot_times.empty() || res.snapshot_times.back() != s.t)) snapshot();
  return res;
}

}  // namespace sgnlab

#endif  // SGNLAB_SOLVER_HPP

#include "sgnlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sgnlab/solver_io.hpp"
#include "sgnlab/waves.hpp"

namespace sgnlab {

namespace {

constexpr double kRegridInterval = 10.0;
constexpr double kRegridTol = 1e-5;

double side_depth(const ExperimentConfig& c) {
  return c.wave.side == Placement::Minus ? c.h_minus : c.h_plus;
}

double side_velocity(const ExperimentConfig& c) {
  return c.wave.side == Placement::Minus ? c.u_minus() : c.u_plus;
}

double incident_amplitude(const ExperimentConfig& c) {
  return side_depth(c) * c.wave.z * c.wave.z;
}

double width_of(double h, double a) { return 1 / solitary_inverse_width(h, a); }

// Disturbance energy relative to the uniform state (h0, u0): the energy density
// minus its linearization in the conserved variables, quadratic in the perturbation.
double pseudo_energy_density(double h, double u, double ux, double h0, double u0) {
  const double e = h * (h + u * u + h * h * ux * ux / 3) / 2;
  const double e0 = h0 * (h0 + u0 * u0) / 2;
  return e - e0 - (h0 - u0 * u0 / 2) * (h - h0) - u0 * (h * u - h0 * u0);
}

// Characteristic speeds bounding the mean structure (no ramp margin).
std::pair<double, double> structure_speeds(const ExperimentConfig& cfg) {
  const RiemannStep step = cfg.step();
  if (cfg.h_minus == cfg.h_plus) return {step.u_plus, step.u_plus};
  if (step.is_rarefaction()) {
    const auto [a, b] = step.fan_edges();
    return {std::min(a, b), std::max(a, b)};
  }
  const double u_lo = std::min(step.u_minus, step.u_plus);
  const double u_hi = std::max(step.u_minus, step.u_plus);
  if (cfg.mu == 1) {
    const auto edge = dsw_lead_amplitude(cfg.h_minus, cfg.h_plus, InvariantMethod::Exact, cfg.u_plus);
    return {u_lo, edge.speed};
  }
  // Slow DSW: mirror image of a fast DSW under x -> -x, u -> -u.
  const auto edge = dsw_lead_amplitude(cfg.h_plus, cfg.h_minus, InvariantMethod::Exact, -step.u_minus);
  return {-edge.speed, u_hi};
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = (m + *std::max_element(v.begin(), v.begin() + mid)) / 2;
  return m;
}

double excess_energy(const GridState<double>& s, double x_lo, double x_hi, double h0, double u0) {
  double total = 0;
  const Eigen::Index n = s.n_cells();
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double x = s.x(i);
    if (x < x_lo || x > x_hi) continue;
    const double u = s.hu[i] / s.h[i];
    const double ux = (s.hu[i + 1] / s.h[i + 1] - s.hu[i - 1] / s.h[i - 1]) / (2 * s.dx);
    total += pseudo_energy_density(s.h[i], u, ux, h0, u0) * s.dx;
  }
  return total;
}

}  // namespace

double ExperimentConfig::u_minus() const { return u_plus + 2 * mu * (std::sqrt(h_minus) - std::sqrt(h_plus)); }

RiemannStep ExperimentConfig::step() const { return RiemannStep::simple(h_minus, h_plus, mu, u_plus); }

double ExperimentConfig::effective_ramp_width() const {
  return ramp_width > 0 ? ramp_width : 5 * (h_minus + h_plus) / 2;
}

double ExperimentConfig::min_offset() const {
  if (wave.z == 0) return 0;
  return 20 * width_of(side_depth(*this), incident_amplitude(*this)) + 2 * effective_ramp_width();
}

double ExperimentConfig::effective_offset() const {
  if (wave.offset > 0) return wave.offset;
  return dx * std::ceil(min_offset() / dx);
}

void ExperimentConfig::validate() const {
  if (!(h_minus > 0 && h_plus > 0)) throw std::invalid_argument("experiment: depths must be positive");
  check_branch(mu, "mu");
  check_branch(sigma, "sigma");
  if (!(dx > 0)) throw std::invalid_argument("experiment: dx must be positive");
  if (!(wave.z >= 0)) throw std::invalid_argument("experiment: incident z must be non-negative");
  if (!(ramp_width >= 0)) throw std::invalid_argument("experiment: ramp_width must be non-negative");
  if (!(trail >= 0)) throw std::invalid_argument("experiment: trail must be non-negative");
  if (!(wave.offset >= 0)) throw std::invalid_argument("experiment: soliton offset must be non-negative");
  solver.validate();
  if (wave.z > 0 && wave.offset > 0 && wave.offset < min_offset()) {
    throw std::invalid_argument("experiment: soliton overlaps the step ramp (offset " +
                                format_number(wave.offset) + " < required " +
                                format_number(min_offset()) + " = 20 widths + 2 ramp widths)");
  }
  if (fixed_domain() && wave.z > 0) {
    const double x0 = wave.side == Placement::Minus ? -effective_offset() : effective_offset();
    const double w = width_of(side_depth(*this), incident_amplitude(*this));
    if (x0 - 10 * w < x_left || x0 + 10 * w > x_right) {
      throw std::invalid_argument("experiment: incident wave does not fit inside the domain");
    }
  }
}

double solitary_inverse_width(double h, double a) {
  return SolitaryWave<double>{h, 0.0, a, 1}.inverse_width();
}

GridState<double> build_initial(const ExperimentConfig& cfg) {
  cfg.validate();
  const double ramp = cfg.effective_ramp_width();
  const double offset = cfg.effective_offset();
  const double a = incident_amplitude(cfg);
  const double x0 = cfg.wave.side == Placement::Minus ? -offset : offset;
  double xl, xr;
  if (cfg.fixed_domain()) {
    xl = cfg.x_left;
    xr = cfg.x_right;
  } else {
    const double w = a > 0 ? width_of(side_depth(cfg), a) : 0.0;
    const double pad = 50 * std::max(cfg.h_minus, cfg.h_plus);
    xl = std::min(-4 * ramp, a > 0 ? x0 - 15 * w : 0.0) - pad;
    xr = std::max(4 * ramp, a > 0 ? x0 + 15 * w : 0.0) + pad;
    xl = cfg.dx * std::floor(xl / cfg.dx);
  }
  const auto n = Eigen::Index(std::llround((xr - xl) / cfg.dx));
  if (n < 3) throw std::invalid_argument("experiment: domain holds fewer than 3 cells");
  const Eigen::ArrayXd x = xl + (Eigen::ArrayXd::LinSpaced(n, 0, double(n - 1)) + 0.5) * cfg.dx;
  const Eigen::ArrayXd w = 0.5 * (1 - (x / ramp).tanh());
  const double um = cfg.u_minus();
  Eigen::ArrayXd h = cfg.h_plus + (cfg.h_minus - cfg.h_plus) * w;
  Eigen::ArrayXd u = cfg.u_plus + (um - cfg.u_plus) * w;
  if (a > 0) {
    const double hs = side_depth(cfg), us = side_velocity(cfg);
    const auto sol = solitary_profile(SolitaryWave<double>{hs, us, a, cfg.sigma, x0}, x, 0.0);
    h += sol.h - hs;
    u += sol.u - us;
  }
  return GridState<double>::from_primitive(xl, cfg.dx, h, u);
}

std::string to_string(MeasuredKind k) {
  switch (k) {
    case MeasuredKind::Transmitted:
      return "transmitted";
    case MeasuredKind::Trapped:
      return "trapped";
    case MeasuredKind::Uncertain:
      return "uncertain";
  }
  return "unknown";
}

std::vector<CrestCandidate> find_crests(const GridState<double>& s, double min_prominence) {
  const Eigen::Index n = s.n_cells();
  const auto& h = s.h;
  // Sparse table for range minima.
  std::vector<std::vector<double>> table{std::vector<double>(h.data(), h.data() + n)};
  for (Eigen::Index span = 1; 2 * span <= n; span *= 2) {
    const auto& prev = table.back();
    std::vector<double> next(n - 2 * span + 1);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = std::min(prev[i], prev[i + span]);
    table.push_back(std::move(next));
  }
  const auto range_min = [&](Eigen::Index lo, Eigen::Index hi) {
    int k = 0;
    while ((Eigen::Index(2) << k) <= hi - lo + 1) ++k;
    return std::min(table[k][lo], table[k][hi - (Eigen::Index(1) << k) + 1]);
  };
  // Nearest strictly higher cell on each side.
  std::vector<Eigen::Index> left(n, -1), right(n, n), stack;
  for (Eigen::Index i = 0; i < n; ++i) {
    while (!stack.empty() && h[stack.back()] <= h[i]) stack.pop_back();
    left[i] = stack.empty() ? -1 : stack.back();
    stack.push_back(i);
  }
  stack.clear();
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    while (!stack.empty() && h[stack.back()] <= h[i]) stack.pop_back();
    right[i] = stack.empty() ? n : stack.back();
    stack.push_back(i);
  }
  std::vector<CrestCandidate> out;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (!(h[i] > h[i - 1] && h[i] >= h[i + 1])) continue;
    const double lmin = range_min(left[i] + 1, i);
    const double rmin = range_min(i, right[i] - 1);
    // Without a higher neighbour on a side, that side's base is the domain minimum there.
    // Without a higher cell on a side the minimum runs to the domain edge, so a
    // plateau ending at the boundary does not count as a crest.
    const double prom = h[i] - std::max(lmin, rmin);
    if (prom < min_prominence) continue;
    const Crest<double> c = find_crest(s, s.x(i) - 0.5 * s.dx, s.x(i) + 0.5 * s.dx);
    out.push_back({c.x, c.h, 0, 0, prom, ""});
  }
  return out;
}

MeasuredOutcome measure_transmission(const GridState<double>& s, const MeasureContext& ctx) {
  if (!(ctx.a_incident > 0)) throw std::invalid_argument("measure_transmission: incident amplitude must be positive");
  MeasuredOutcome res;
  const auto& o = ctx.opts;
  auto crests = find_crests(s, o.prominence_frac * ctx.a_incident);
  const double edge = ctx.exit_side > 0 ? ctx.structure_hi : ctx.structure_lo;
  const int dir = ctx.exit_side;

  std::vector<std::size_t> beyond;
  for (std::size_t k = 0; k < crests.size(); ++k) {
    auto& c = crests[k];
    const double a0 = std::max(c.h - ctx.h_exit, 1e-3 * ctx.a_incident);
    const double w = width_of(ctx.h_exit, a0);
    // background: median over a window trailing the crest
    const double near = c.x - dir * o.gap_widths * w;
    const double far = c.x - dir * (o.gap_widths + o.window_widths) * w;
    std::vector<double> vals;
    for (Eigen::Index i = 0; i < s.n_cells(); ++i) {
      const double x = s.x(i);
      if (x >= std::min(near, far) && x <= std::max(near, far)) vals.push_back(s.h[i]);
    }
    c.background = vals.empty() ? ctx.h_exit : median(std::move(vals));
    c.amplitude = c.h - c.background;
    const double wa = width_of(ctx.h_exit, std::max(c.amplitude, 1e-3 * ctx.a_incident));
    if (dir * (c.x - edge) >= o.clear_widths * wa) {
      beyond.push_back(k);
    } else {
      c.role = "inside";
    }
  }
  if (beyond.empty()) {
    res.outcome = MeasuredKind::Trapped;
    res.crests = std::move(crests);
    res.radiation_fraction = ctx.incident_excess_energy > 0
                                 ? excess_energy(s, dir > 0 ? edge : -1e300, dir > 0 ? 1e300 : edge,
                                                 ctx.h_exit, ctx.u_exit) /
                                       ctx.incident_excess_energy
                                 : 0;
    return res;
  }
  const std::size_t main = *std::max_element(beyond.begin(), beyond.end(), [&](std::size_t a, std::size_t b) {
    return crests[a].amplitude < crests[b].amplitude;
  });
  auto& m = crests[main];
  m.role = "transmitted";
  res.outcome = MeasuredKind::Transmitted;
  for (std::size_t k : beyond) {
    if (k == main) continue;
    auto& c = crests[k];
    if (c.amplitude >= o.comparable_ratio * m.amplitude) {
      c.role = "comparable";
      res.outcome = MeasuredKind::Uncertain;
    } else {
      c.role = dir * (c.x - m.x) < 0 ? "secondary" : "ahead";
    }
  }
  res.a_measured = m.amplitude;
  res.x_crest = m.x;
  const double wm = width_of(ctx.h_exit, std::max(m.amplitude, 1e-3 * ctx.a_incident));
  if (ctx.incident_excess_energy > 0) {
    const double lo = dir > 0 ? edge : -1e300, hi = dir > 0 ? 1e300 : edge;
    const double all = excess_energy(s, lo, hi, ctx.h_exit, ctx.u_exit);
    const double wave = excess_energy(s, m.x - 8 * wm, m.x + 8 * wm, ctx.h_exit, ctx.u_exit);
    res.radiation_fraction = std::max(0.0, all - wave) / ctx.incident_excess_energy;
  }
  res.crests = std::move(crests);
  return res;
}

std::pair<double, double> structure_extent(const ExperimentConfig& cfg, double t) {
  const auto [lo, hi] = structure_speeds(cfg);
  const double margin = 3 * cfg.effective_ramp_width();
  return {lo * t - margin, hi * t + margin};
}

InteractionPrediction predict(const ExperimentConfig& cfg) {
  cfg.validate();
  InteractionPrediction none;
  if (cfg.wave.z == 0) return none;
  const int sm = cfg.sigma * cfg.mu;
  const auto [lo, hi] = structure_speeds(cfg);
  const double hs = side_depth(cfg), us = side_velocity(cfg);
  const double c = us + cfg.sigma * std::sqrt(hs * (1 + cfg.wave.z * cfg.wave.z));
  TransmitOptions opts;
  opts.method = cfg.method;
  opts.sigma = cfg.sigma;
  if (cfg.wave.side == Placement::Minus) {
    if (cfg.sigma < 0 || c <= lo) {
      none.z_plus = cfg.wave.z;
      none.a_plus = incident_amplitude(cfg);
      none.c_plus = c;
      return none;
    }
    opts.u_plus = cfg.u_plus;
    return transmit(cfg.h_minus, cfg.h_plus, cfg.wave.z, sm, opts);
  }
  if (cfg.sigma > 0 || c >= hi) {
    if (cfg.sigma > 0 && c <= hi) {
      // The structure overtakes the wave from behind.
      opts.u_plus = cfg.u_minus();
      return transmit(cfg.h_plus, cfg.h_minus, cfg.wave.z, sm, opts);
    }
    none.z_plus = cfg.wave.z;
    none.a_plus = incident_amplitude(cfg);
    none.c_plus = c;
    return none;
  }
  opts.u_plus = cfg.u_minus();
  return transmit(cfg.h_plus, cfg.h_minus, cfg.wave.z, sm, opts);
}

EndTime auto_end_time(const ExperimentConfig& cfg, const InteractionPrediction& pred) {
  EndTime out;
  const double a_in = incident_amplitude(cfg);
  if (a_in == 0) {
    out.t_end = 100 * std::sqrt(std::max(cfg.h_minus, cfg.h_plus));
    return out;
  }
  const double offset = cfg.effective_offset();
  const double hs = side_depth(cfg), us = side_velocity(cfg);
  const double c_in = us + cfg.sigma * std::sqrt(hs + a_in);
  const double w_in = width_of(hs, a_in);
  const auto [lo, hi] = structure_speeds(cfg);
  if (pred.outcome == Outcome::NoInteraction) {
    const double gap = std::max(std::abs(c_in - (cfg.sigma > 0 ? hi : lo)), 0.05);
    out.t_end = 1.5 * (20 * w_in) / gap;
    return out;
  }
  const bool minus = cfg.wave.side == Placement::Minus;
  const double entry = minus ? lo : hi;
  const double exit = minus ? hi : lo;
  const double h_out = minus ? cfg.h_plus : cfg.h_minus;
  const double u_out = minus ? cfg.u_plus : cfg.u_minus();
  const RiemannStep step = cfg.step();
  out.t_enter = offset / std::abs(c_in - entry);
  std::optional<double> trap_xi;
  if (step.is_rarefaction() && minus && cfg.sigma > 0) {
    const auto path = soliton_path_through_rw(step, {cfg.wave.z, -offset, cfg.sigma});
    if (path.t_enter) out.t_enter = path.t_enter;
    out.t_exit = path.t_exit;
    trap_xi = path.trap_xi;
  }
  if (pred.outcome != Outcome::Transmitted) {
    const double gap = trap_xi ? std::abs(exit - *trap_xi) : std::abs(c_in - exit);
    out.t_end = *out.t_enter + 1.5 * 20 * w_in / std::max(gap, 1e-3);
    return out;
  }
  if (!out.t_exit) {
    const double c_mid = (c_in + *pred.c_plus) / 2;
    out.t_exit = std::max(*out.t_enter, offset / std::max(std::abs(c_mid - exit), 1e-3));
  }
  // 10 widths clear of the structure edge; when linear waves shed at the exit can
  // outrun that edge, also 20 widths clear of them.
  const double w = width_of(h_out, *pred.a_plus);
  const double c_lin = u_out + cfg.sigma * std::sqrt(h_out);
  const double gap_edge = std::max(std::abs(*pred.c_plus - exit), 1e-3);
  const double gap_lin = std::max(std::abs(*pred.c_plus - c_lin), 1e-3);
  double clear = 10 * w / gap_edge;
  if (cfg.sigma * (c_lin - exit) > 1e-9) clear = std::max(clear, 20 * w / gap_lin);
  out.t_end = *out.t_exit + 1.5 * clear;
  return out;
}

bool adapt_window(GridState<double>& s, double h_left, double u_left, double h_right,
                  double u_right, double margin, double tol, double cut_lo, double cut_hi) {
  const Eigen::Index n = s.n_cells();
  const auto active = [&](Eigen::Index i, double href, double uref) {
    return std::abs(s.h[i] - href) > tol || std::abs(s.hu[i] / s.h[i] - uref) > tol;
  };
  Eigen::Index first = 0;
  while (first < n && !active(first, h_left, u_left)) ++first;
  Eigen::Index last = n - 1;
  while (last >= 0 && !active(last, h_right, u_right)) --last;
  const auto m = Eigen::Index(std::ceil(margin / s.dx));
  // Keep between m and 2m cells of margin on each side.
  Eigen::Index add_left = 0, add_right = 0, drop_left = 0, drop_right = 0;
  if (first <= last) {
    if (first < m) add_left = m - first;
    else if (first > 2 * m) drop_left = first - m;
    const Eigen::Index tail = n - 1 - last;
    if (tail < m) add_right = m - tail;
    else if (tail > 2 * m) drop_right = tail - m;
  }
  if (std::isfinite(cut_lo)) {
    add_left = 0;
    const double cells = std::floor((cut_lo - s.x0) / s.dx);
    if (cells > double(drop_left)) drop_left = Eigen::Index(cells);
  }
  if (std::isfinite(cut_hi)) {
    add_right = 0;
    const double cells = std::floor((s.x0 + s.length() - cut_hi) / s.dx);
    if (cells > double(drop_right)) drop_right = Eigen::Index(cells);
  }
  if (drop_left + drop_right > n - 3) return false;
  if (add_left + add_right + drop_left + drop_right == 0) return false;
  const Eigen::Index keep = n - drop_left - drop_right;
  const Eigen::Index nn = keep + add_left + add_right;
  Eigen::ArrayXd h(nn), hu(nn), p(nn);
  h.head(add_left).setConstant(h_left);
  hu.head(add_left).setConstant(h_left * u_left);
  p.head(add_left).setZero();
  h.segment(add_left, keep) = s.h.segment(drop_left, keep);
  hu.segment(add_left, keep) = s.hu.segment(drop_left, keep);
  p.segment(add_left, keep) = s.varpi.segment(drop_left, keep);
  h.tail(add_right).setConstant(h_right);
  hu.tail(add_right).setConstant(h_right * u_right);
  p.tail(add_right).setZero();
  s.x0 += double(drop_left - add_left) * s.dx;
  s.h.swap(h);
  s.hu.swap(hu);
  s.varpi.swap(p);
  return true;
}

ExperimentResult run_experiment(ExperimentConfig cfg, const ExperimentHooks& hooks) {
  cfg.validate();
  cfg.wave.offset = cfg.effective_offset();
  ExperimentResult res;
  res.prediction = predict(cfg);
  if (cfg.solver.t_end == 0) cfg.solver.t_end = auto_end_time(cfg, res.prediction).t_end;
  res.config = cfg;

  GridState<double> s = build_initial(cfg);
  const double a_in = incident_amplitude(cfg);
  const double x0 = cfg.wave.side == Placement::Minus ? -cfg.wave.offset : cfg.wave.offset;
  const int dir = cfg.sigma;
  const double h_exit = dir > 0 ? cfg.h_plus : cfg.h_minus;
  const double u_exit = dir > 0 ? cfg.u_plus : cfg.u_minus();

  MeasureContext ctx;
  ctx.a_incident = a_in;
  ctx.exit_side = dir;
  ctx.h_exit = h_exit;
  ctx.u_exit = u_exit;
  ctx.opts = cfg.measure;
  if (a_in > 0) {
    const double w = width_of(side_depth(cfg), a_in);
    ctx.incident_excess_energy =
        excess_energy(s, x0 - 15 * w, x0 + 15 * w, side_depth(cfg), side_velocity(cfg));
  }

  const double t_end = cfg.solver.t_end;
  const double t_probe = t_end - std::min(0.1 * t_end, 100.0);
  std::optional<std::pair<double, double>> early;  // (t, x) of the transmitted crest
  double next_regrid = kRegridInterval;
  RunHooks<double> rh;
  rh.on_snapshot = hooks.on_snapshot;
  rh.probe_every = t_end / 200;
  const double um = cfg.u_minus();
  double x_track = x0, c_track = side_velocity(cfg) + dir * std::sqrt(side_depth(cfg) + a_in), t_track = 0;
  const double w_in = a_in > 0 ? width_of(side_depth(cfg), a_in) : 0.0;
  rh.after_step = [&](GridState<double>& st) {
    if (!cfg.fixed_domain() && st.t >= next_regrid) {
      double cut_lo = -std::numeric_limits<double>::infinity();
      double cut_hi = std::numeric_limits<double>::infinity();
      if (a_in > 0) {
        // follow the crest nearest to where the last one was heading
        const double x_pred = x_track + c_track * (st.t - t_track);
        const double reach = 20 * w_in + 2 * kRegridInterval;
        double best = reach;
        std::optional<double> found;
        for (const auto& c : find_crests(st, cfg.measure.prominence_frac * a_in)) {
          if (std::abs(c.x - x_pred) < best) {
            best = std::abs(c.x - x_pred);
            found = c.x;
          }
        }
        if (found) {
          c_track = (*found - x_track) / (st.t - t_track);
          x_track = *found;
        } else {
          x_track = x_pred;
        }
        t_track = st.t;
        // Cutting inside the structure injects errors along its characteristics; they
        // stay behind the wave only when the whole structure moves the wave's way.
        const auto speeds = structure_speeds(cfg);
        if (cfg.trail > 0 && dir * (dir > 0 ? speeds.first : speeds.second) > 0) {
          const auto [lo, hi] = structure_extent(cfg, st.t);
          if (dir > 0) cut_lo = std::min(x_track, hi) - cfg.trail;
          else cut_hi = std::max(x_track, lo) + cfg.trail;
        }
      }
      const double smax = ((st.hu / st.h).abs() + st.h.sqrt()).maxCoeff();
      const double margin = 40 + 2 * smax * kRegridInterval;
      adapt_window(st, cfg.h_minus, um, cfg.h_plus, cfg.u_plus, margin, kRegridTol, cut_lo, cut_hi);
      next_regrid = st.t + kRegridInterval;
    }
    if (a_in > 0 && !early && st.t >= t_probe) {
      ctx.structure_lo = structure_extent(cfg, st.t).first;
      ctx.structure_hi = structure_extent(cfg, st.t).second;
      const auto m = measure_transmission(st, ctx);
      if (m.x_crest) early = std::make_pair(st.t, *m.x_crest);
    }
  };
  std::vector<Probe<double>> probe_list{probes::crest_position<double>(), probes::crest_height<double>()};
  auto run_res = run(s, cfg.solver, probe_list, rh);
  res.final_state = std::move(run_res.final_state);
  res.probes = std::move(run_res.series);
  res.steps = run_res.steps;
  if (a_in > 0) {
    const auto [lo, hi] = structure_extent(cfg, res.final_state.t);
    ctx.structure_lo = lo;
    ctx.structure_hi = hi;
    res.measured = measure_transmission(res.final_state, ctx);
    if (res.measured.x_crest && early && res.final_state.t > early->first) {
      res.measured.c_measured = (*res.measured.x_crest - early->second) / (res.final_state.t - early->first);
    }
  }
  return res;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SGNLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return int(v);
  }
  return int(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min<std::size_t>(std::max(1, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<SweepRow> sweep_transmission(const std::vector<SweepPoint>& grid, const SweepOptions& opts) {
  std::vector<SweepRow> rows(grid.size());
  parallel_for(grid.size(), opts.simulate ? resolve_threads(opts.threads) : 1, [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.point = grid[i];
    const auto& p = grid[i];
    try {
      check_branch(p.mu, "mu");
      check_branch(p.sigma, "sigma");
      TransmitOptions t;
      t.method = opts.method;
      t.sigma = p.sigma;
      row.prediction = transmit(p.h_minus, p.h_plus, p.z_minus, p.sigma * p.mu, t);
      if (opts.simulate) {
        ExperimentConfig cfg = opts.base;
        cfg.h_minus = p.h_minus;
        cfg.h_plus = p.h_plus;
        cfg.mu = p.mu;
        cfg.sigma = p.sigma;
        cfg.wave.side = Placement::Minus;
        cfg.wave.z = p.z_minus;
        cfg.method = opts.method;
        const auto r = run_experiment(cfg);
        row.a_measured = r.measured.a_measured;
        if (row.a_measured && row.prediction->a_plus) {
          row.rel_err = (*row.a_measured - *row.prediction->a_plus) / *row.prediction->a_plus;
        }
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  return rows;
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "h_minus,h_plus,mu,sigma,z_minus,z_plus_pred,a_plus_pred,outcome,a_measured,rel_err\n";
  for (const auto& r : rows) {
    const auto& p = r.point;
    out << format_number(p.h_minus) << ',' << format_number(p.h_plus) << ',' << p.mu << ',' << p.sigma
        << ',' << format_number(p.z_minus) << ',';
    if (r.prediction) {
      out << opt_number(r.prediction->z_plus) << ',' << opt_number(r.prediction->a_plus) << ','
          << to_string(r.prediction->outcome);
    } else {
      out << ",,error";
    }
    out << ',' << opt_number(r.a_measured) << ',' << opt_number(r.rel_err) << '\n';
  }
  return out.str();
}

std::optional<double> measure_lead_crest(const GridState<double>& s, double h_plus, double min_amplitude) {
  const auto crests = find_crests(s, 0.5 * min_amplitude);
  std::optional<double> best;
  double best_x = -1e300;
  for (const auto& c : crests) {
    if (c.h - h_plus >= min_amplitude && c.x > best_x) {
      best_x = c.x;
      best = c.h - h_plus;
    }
  }
  return best;
}

double dsw_auto_end_time(double ratio, double h_plus) {
  const double delta = ratio - 1;
  return std::max(400.0, 80.0 / delta) * std::sqrt(h_plus);
}

std::vector<DswEdgeRow> dsw_edge_experiment(const std::vector<double>& ratios, const DswEdgeOptions& opts) {
  if (ratios.empty()) throw std::invalid_argument("dsw_edge_experiment: empty ratio list");
  for (double r : ratios) {
    if (!(r > 1)) throw std::invalid_argument("dsw_edge_experiment: ratios must exceed 1");
  }
  std::vector<DswEdgeRow> rows(ratios.size());
  parallel_for(ratios.size(), opts.simulate ? resolve_threads(opts.threads) : 1, [&](std::size_t i) {
    DswEdgeRow& row = rows[i];
    row.ratio = ratios[i];
    const double hm = row.ratio * opts.h_plus;
    const auto exact = dsw_lead_amplitude(hm, opts.h_plus);
    row.a_exact = exact.a_plus;
    if (row.ratio <= kFittingAdmissibleRatio) {
      row.a_fitting = dsw_lead_amplitude(hm, opts.h_plus, InvariantMethod::Fitting).a_plus;
    } else {
      row.note = "fitting refused: ratio outside 1 < h-/h+ <= 1.43";
    }
    if (!opts.simulate) return;
    ExperimentConfig cfg;
    cfg.h_minus = hm;
    cfg.h_plus = opts.h_plus;
    cfg.mu = 1;
    cfg.dx = opts.dx;
    cfg.solver.limiter = opts.limiter;
    cfg.solver.t_end = opts.t_end > 0 ? opts.t_end : dsw_auto_end_time(row.ratio, opts.h_plus);
    const auto r = run_experiment(cfg);
    row.a_simulated = measure_lead_crest(r.final_state, opts.h_plus, 0.25 * exact.a_plus);
    const double w = width_of(opts.h_plus, exact.a_plus);
    const double v_plus = std::sqrt(opts.h_plus);
    row.developed = (exact.speed - v_plus) * cfg.solver.t_end >= 10 * w;
    if (!row.developed) {
      row.note += std::string(row.note.empty() ? "" : "; ") + "DSW not developed at t_end";
    }
    if (!row.a_simulated) {
      row.note += std::string(row.note.empty() ? "" : "; ") + "no leading crest found";
    }
  });
  return rows;
}

std::string dsw_edge_csv(const std::vector<DswEdgeRow>& rows) {
  std::ostringstream out;
  out << "ratio,a_exact,a_fitting,a_simulated,developed,note\n";
  for (const auto& r : rows) {
    out << format_number(r.ratio) << ',' << format_number(r.a_exact) << ',' << opt_number(r.a_fitting)
        << ',' << opt_number(r.a_simulated) << ',' << (r.developed ? 1 : 0) << ',' << r.note << '\n';
  }
  return out.str();
}

}  // namespace sgnlab

// Riemann-problem plus solitary-wave scenarios: initial data, simulation,
// crest measurement and comparison with the modulation predictions.
#ifndef SGNLAB_EXPERIMENTS_HPP
#define SGNLAB_EXPERIMENTS_HPP

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sgnlab/modulation.hpp"
#include "sgnlab/solver.hpp"

namespace sgnlab {

/// Side of the initial step on which the incident wave sits.
enum class Placement { Minus, Plus };

struct IncidentWave {
  Placement side = Placement::Minus;
  /// Normalized amplitude sqrt(a / h) relative to the depth on `side`; 0 means no wave.
  double z = 0.0;
  /// Distance from the step to the initial crest; 0 picks the smallest admissible offset.
  double offset = 0.0;
};

struct MeasureOptions {
  /// Crest prominence threshold as a fraction of the incident amplitude.
  double prominence_frac = 0.05;
  /// Background window length and its gap behind the crest, in soliton widths.
  double window_widths = 5.0;
  double gap_widths = 3.0;
  /// A transmitted crest must clear the mean-structure edge by this many widths.
  double clear_widths = 3.0;
  /// Two crests whose amplitude ratio exceeds this are treated as comparable.
  double comparable_ratio = 0.8;
};

struct ExperimentConfig {
  double h_minus = 1.0;
  double h_plus = 1.0;
  int mu = 1;
  int sigma = 1;
  double u_plus = 0.0;
  IncidentWave wave;
  /// tanh ramp width of the smoothed step; 0 means 5 (h- + h+) / 2.
  double ramp_width = 0.0;
  double dx = 0.1;
  /// solver.t_end = 0 selects the end time automatically.
  SolverConfig solver;
  /// Fixed domain when x_right > x_left; otherwise the grid follows the active region.
  double x_left = 0.0;
  double x_right = 0.0;
  /// With a moving window and a mean structure moving the wave's way, the part lying
  /// farther than this behind both the tracked wave and the exit edge is discarded;
  /// 0 keeps it.
  double trail = 150.0;
  MeasureOptions measure;
  InvariantMethod method = InvariantMethod::Exact;

  double u_minus() const;
  RiemannStep step() const;
  double effective_ramp_width() const;
  bool fixed_domain() const { return x_right > x_left; }
  /// Smallest offset keeping the wave 20 widths clear of the ramp.
  double min_offset() const;
  double effective_offset() const;
  void validate() const;
};

/// Inverse width b of a solitary wave of amplitude a on depth h (1/b is one width).
double solitary_inverse_width(double h, double a);

/// Smoothed step with the incident solitary wave superposed.
GridState<double> build_initial(const ExperimentConfig& cfg);

enum class MeasuredKind { Transmitted, Trapped, Uncertain };

std::string to_string(MeasuredKind k);

struct CrestCandidate {
  double x = 0;
  double h = 0;
  double background = 0;
  double amplitude = 0;
  double prominence = 0;
  /// transmitted, secondary, comparable, inside or ahead.
  std::string role;
};

struct MeasuredOutcome {
  MeasuredKind outcome = MeasuredKind::Trapped;
  std::optional<double> a_measured;
  std::optional<double> c_measured;
  std::optional<double> x_crest;
  /// Excess energy outside the transmitted wave and mean structure, over the incident excess energy.
  double radiation_fraction = 0;
  std::vector<CrestCandidate> crests;
};

/// Geometry the measurement needs at the snapshot time.
struct MeasureContext {
  double a_incident = 0;
  /// Mean structure occupies [structure_lo, structure_hi].
  double structure_lo = 0;
  double structure_hi = 0;
  /// +1 if the wave leaves through structure_hi, -1 through structure_lo.
  int exit_side = 1;
  /// Uniform state beyond the exit edge.
  double h_exit = 1;
  double u_exit = 0;
  double incident_excess_energy = 0;
  MeasureOptions opts;
};

/// Local maxima of h whose topographic prominence is at least `min_prominence`.
std::vector<CrestCandidate> find_crests(const GridState<double>& s, double min_prominence);

MeasuredOutcome measure_transmission(const GridState<double>& s, const MeasureContext& ctx);

/// Mean-structure edges at time t for the configured step.
std::pair<double, double> structure_extent(const ExperimentConfig& cfg, double t);

/// Chosen end time and the reasoning inputs behind it.
struct EndTime {
  double t_end = 0;
  std::optional<double> t_enter;
  std::optional<double> t_exit;
};

EndTime auto_end_time(const ExperimentConfig& cfg, const InteractionPrediction& pred);

InteractionPrediction predict(const ExperimentConfig& cfg);

struct ExperimentHooks {
  std::function<void(const GridState<double>&)> on_snapshot;
};

struct ExperimentResult {
  ExperimentConfig config;  ///< with t_end and offset resolved
  InteractionPrediction prediction;
  MeasuredOutcome measured;
  GridState<double> final_state;
  ProbeSeries<double> probes;
  long steps = 0;
};

/// Builds, runs and measures one scenario.
ExperimentResult run_experiment(ExperimentConfig cfg, const ExperimentHooks& hooks = {});

/// Regrids so that the active region keeps `margin` of uniform state on both sides.
///
/// Cells whose (h, u) differ from the far states by more than `tol` are active;
/// inactive cells beyond the margin are dropped and missing margin is padded
/// with the far state. The grid stays aligned to multiples of dx. Cells left of
/// `cut_lo` or right of `cut_hi` are dropped regardless, and a side with a finite cut is never padded.
bool adapt_window(GridState<double>& s, double h_left, double u_left, double h_right,
                  double u_right, double margin, double tol,
                  double cut_lo = -std::numeric_limits<double>::infinity(),
                  double cut_hi = std::numeric_limits<double>::infinity());

struct SweepPoint {
  double h_minus;
  double h_plus;
  int mu;
  int sigma;
  double z_minus;
};

struct SweepRow {
  SweepPoint point;
  std::optional<InteractionPrediction> prediction;
  std::optional<double> a_measured;
  std::optional<double> rel_err;
  std::string error;  ///< empty on success
};

struct SweepOptions {
  InvariantMethod method = InvariantMethod::Exact;
  bool simulate = false;
  /// Template for simulated rows; depths, branches and z- come from the point.
  ExperimentConfig base;
  /// 0 means SGNLAB_THREADS or the hardware concurrency.
  int threads = 0;
};

/// Predictions (and optionally simulations) for every point; failures are recorded per row.
std::vector<SweepRow> sweep_transmission(const std::vector<SweepPoint>& grid, const SweepOptions& opts);

/// CSV with header h_minus,h_plus,mu,sigma,z_minus,z_plus_pred,a_plus_pred,outcome,a_measured,rel_err.
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct DswEdgeRow {
  double ratio;
  double a_exact = 0;
  std::optional<double> a_fitting;
  std::optional<double> a_simulated;
  bool developed = true;
  std::string note;
};

struct DswEdgeOptions {
  bool simulate = false;
  double h_plus = 1.0;
  double dx = 0.1;
  Limiter limiter = Limiter::None;
  /// 0 selects max(400, 80 / delta) sqrt(h+).
  double t_end = 0.0;
  int threads = 0;
};

/// Leading amplitude of a dam-break DSW with h-/h+ = ratio, from the simulated
/// final state (rightmost prominent crest minus h+).
std::optional<double> measure_lead_crest(const GridState<double>& s, double h_plus, double min_amplitude);

double dsw_auto_end_time(double ratio, double h_plus);

std::vector<DswEdgeRow> dsw_edge_experiment(const std::vector<double>& ratios, const DswEdgeOptions& opts);

std::string dsw_edge_csv(const std::vector<DswEdgeRow>& rows);

/// Worker count: explicit request, else SGNLAB_THREADS, else hardware concurrency.
int resolve_threads(int requested);

/// Runs job(i) for i in [0, n) on up to `threads` workers; each index runs once.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job);

}  // namespace sgnlab

#endif  // SGNLAB_EXPERIMENTS_HPP

// Solitonic modulation theory: the amplitude equation of the solitary-wave
// limit, its simple-wave Riemann invariants (exact and DSW-fitting), the
// transmission/trapping relation, and the DSW solitary-wave edge.
#ifndef SGNLAB_MODULATION_HPP
#define SGNLAB_MODULATION_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sgnlab {

/// Mean (dispersionless) state on which a solitary wave rides.
struct MeanState {
  double hbar;
  double ubar;
};

/// Shallow-water Riemann invariants r+- = ubar +- 2 sqrt(hbar).
struct ShallowWaterInvariants {
  double r_plus;
  double r_minus;

  static ShallowWaterInvariants of(const MeanState& s);
};

/// Solitary branch sigma and simple-wave branch mu.
struct InteractionKind {
  int sigma = 1;
  int mu = 1;

  InteractionKind(int sigma, int mu);
  /// sigma * mu: +1 overtaking, -1 head-on.
  int product() const { return sigma * mu; }
  bool overtaking() const { return product() == 1; }
};

enum class Outcome { Transmitted, Trapped, NoInteraction };

std::string to_string(Outcome o);

struct InteractionPrediction {
  Outcome outcome = Outcome::NoInteraction;
  std::optional<double> z_plus;
  std::optional<double> a_plus;
  std::optional<double> c_plus;
  /// False when either incident or transmitted wave exceeds a/h = 0.8.
  bool physically_admissible = true;
};

enum class InvariantMethod { Exact, Fitting };

std::string to_string(InvariantMethod m);
InvariantMethod parse_method(const std::string& s);

/// Coefficient g_{sigma mu}(z) of the reduced amplitude equation; sm = sigma * mu.
double g_coeff(double z, int sm);

/// f_{sigma mu}(z), normalized so that f_+(0) = 0 and f_-(1) = 0.
double f_exact(double z, int sm);

/// ln(Q~_+ / hbar) for the DSW-fitting invariant; zero at z = 0.
double f_fitting(double z);

/// Q_{sigma mu}(hbar, z) = hbar exp(f_{sigma mu}(z)).
double q_exact(double hbar, double z, int sm);

/// Q~_+(hbar, z); requires sqrt(1 + z^2) < 4.
double q_fitting(double hbar, double z);

/// log-invariant used by the transmission relation; the constant offset is irrelevant.
struct LogInvariant {
  std::function<double(double)> f;
  int sm = 1;
  /// Largest z the invariant accepts (the fitting form blows up at sqrt(1+z^2) = 4).
  double z_limit = 0;
};

LogInvariant exact_invariant(int sm);
LogInvariant fitting_invariant();

struct TransmitOptions {
  InvariantMethod method = InvariantMethod::Exact;
  double z_cap = 3.0;
  double u_plus = 0.0;
  int sigma = 1;
};

/// Solves f(z+) + ln h+ = f(z-) + ln h- for the transmitted wave.
InteractionPrediction transmit(double h_minus, double h_plus, double z_minus, int sm,
                               const TransmitOptions& opts = {});

/// Same relation for an arbitrary log-invariant (tests shift its constant).
InteractionPrediction transmit_with(const LogInvariant& inv, double h_minus, double h_plus,
                                    double z_minus, const TransmitOptions& opts = {});

/// Smallest incident z- that still transmits through a fast RW with h+/h- = ratio.
double z_min_exact(double ratio, double z_cap = 3.0);
double z_min_fitting(double ratio);

/// Upper end of the step ratios h-/h+ for which the fitting edge law is admissible.
inline constexpr double kFittingAdmissibleRatio = 1.43;

struct DswEdge {
  double z_plus;
  double a_plus;
  double speed;
};

/// Solitary-wave (leading) edge of the fast DSW for h- > h+.
DswEdge dsw_lead_amplitude(double h_minus, double h_plus,
                           InvariantMethod method = InvariantMethod::Exact,
                           double u_plus = 0.0);

/// Piecewise-constant step satisfying u- - 2 mu sqrt(h-) = u+ - 2 mu sqrt(h+).
struct RiemannStep {
  double h_minus;
  double u_minus;
  double h_plus;
  double u_plus;
  int mu;

  /// Builds the step with u- fixed by the simple-wave constraint.
  static RiemannStep simple(double h_minus, double h_plus, int mu, double u_plus = 0.0);

  /// Throws std::invalid_argument if the constraint or positivity fails.
  void validate(double tol = 1e-12) const;
  /// r_{-mu}, constant across the simple wave.
  double carried_invariant() const;
  /// V_mu(h) = r_{-mu} + 3 mu sqrt(h).
  double characteristic_speed(double hbar) const;
  /// True when the step opens into a rarefaction fan rather than a DSW.
  bool is_rarefaction() const;
  /// (V_mu(h-), V_mu(h+)).
  std::pair<double, double> fan_edges() const;
};

/// Mean state at similarity coordinate x/t for a rarefaction step.
MeanState simple_wave_mean(double x_over_t, const RiemannStep& step);
MeanState simple_wave_mean(double x_over_t, double h_minus, double h_plus, int mu,
                           double u_minus);

struct IncidentSoliton {
  double z_minus;
  double x0;  ///< initial crest position, left of the step (x0 <= 0)
  int sigma = 1;
};

struct PathPoint {
  double t;
  double x;
  double z;
  double hbar;
};

struct PathOptions {
  /// Integration stops at t_enter * horizon if the wave has not left the fan.
  double horizon = 1e10;
  /// Overtaking waves whose z falls below this are declared trapped.
  double z_floor = 1e-9;
  double tol = 1e-12;
};

struct SolitonPath {
  std::vector<PathPoint> points;
  InteractionPrediction prediction;
  std::optional<double> t_enter;
  std::optional<double> t_exit;
  /// x/t at which a trapped wave settles, V_mu(Q).
  std::optional<double> trap_xi;
};

/// Characteristic trajectory of a solitary wave through a rarefaction fan.
///
/// Inside the fan the pair (x/t, z) obeys an autonomous system in s = ln t,
/// d(x/t)/ds = c_s - x/t and dz/ds = -(2 sigma mu / 3) g(z), which is
/// integrated independently of the Riemann invariant.
SolitonPath soliton_path_through_rw(const RiemannStep& step, const IncidentSoliton& wave,
                                    const PathOptions& opts = {});

struct WaveActionPair {
  double F;
  double G;
  double lambda;
};

/// Wave-action density F(n, hbar), flux G(n, hbar) and lambda = G_n / F_n.
WaveActionPair wave_action_pair(double n, double hbar, int sigma);

/// z_t + c_s z_x + coef_hx hbar_x + coef_ux ubar_x = 0 together with V-, V+.
struct SolitonicCoefficients {
  double v_minus;
  double v_plus;
  double c_s;
  double coef_hx;
  double coef_ux;
};

SolitonicCoefficients solitonic_rhs(double hbar, double ubar, double z, int sigma);

/// a_t + c a_x + coef_hx hbar_x + coef_ux ubar_x = 0 (amplitude form).
struct AmplitudeCoefficients {
  double c;
  double coef_hx;
  double coef_ux;
};

AmplitudeCoefficients amplitude_form(double hbar, double ubar, double a, int sigma);

}  // namespace sgnlab

#endif  // SGNLAB_MODULATION_HPP

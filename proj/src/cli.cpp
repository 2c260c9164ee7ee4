#include "sgnlab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "sgnlab/config.hpp"
#include "sgnlab/experiments.hpp"
#include "sgnlab/modulation.hpp"
#include "sgnlab/solver_io.hpp"

#ifndef SGNLAB_VERSION
#define SGNLAB_VERSION "unknown"
#endif

namespace sgnlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream f(file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + file.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + file.string());
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json prediction_json(const InteractionPrediction& p) {
  json j{{"outcome", to_string(p.outcome)}, {"physically_admissible", p.physically_admissible}};
  if (p.z_plus) j["z_plus"] = *p.z_plus;
  if (p.a_plus) j["a_plus"] = *p.a_plus;
  if (p.c_plus) j["c_plus"] = *p.c_plus;
  return j;
}

std::string fmt(const std::optional<double>& v) { return v ? format_number(*v) : "-"; }

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string join_command(int argc, const char* const* argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

// Options of the table commands, kept as canonical entries for the hash.
std::map<std::string, std::string> entries_of(const std::string& cmd,
                                              const std::vector<std::pair<std::string, std::string>>& kv) {
  std::map<std::string, std::string> m;
  for (const auto& [k, v] : kv) m[cmd + "." + k] = v;
  return m;
}

struct Curve {
  double h_minus, h_plus;
  int mu, sigma;
};

std::vector<Curve> preset_curves(const std::string& fig) {
  if (fig == "4c") return {{1, 1.5, 1, 1}, {1.5, 1, 1, 1}};
  if (fig == "6") return {{1, 1.5, 1, 1}, {1.5, 1, -1, 1}};
  if (fig == "7b") return {{1, 1.5, -1, 1}, {1.5, 1, -1, 1}};
  throw UsageError("unknown preset '" + fig + "' (expected 4c, 6 or 7b)");
}

struct PredictArgs {
  double h_minus = 0, h_plus = 0, z_minus = 0, u_plus = 0;
  int mu = 0, sigma = 0;
  std::string method = "exact";
  std::string out = ".";
};

struct SimulateArgs {
  std::string config;
  std::string out;
};

struct TableArgs {
  std::string fig;
  std::optional<double> h_minus, h_plus;
  std::optional<int> mu, sigma;
  std::string z2 = "0.02:2:100";
  std::string ratios = "1.05:1.4:8";
  std::string method = "exact";
  bool simulate = false;
  double dx = 0.05;
  double t_end = 0;
  std::string limiter = "none";
  int threads = 0;
  std::string out = "out";
};

int cmd_predict(const PredictArgs& a, const std::string& command, std::ostream& out) {
  Timer timer;
  ExperimentConfig cfg;
  cfg.h_minus = a.h_minus;
  cfg.h_plus = a.h_plus;
  cfg.mu = a.mu;
  cfg.sigma = a.sigma;
  cfg.u_plus = a.u_plus;
  cfg.wave.z = a.z_minus;
  cfg.wave.side = Placement::Minus;
  InteractionPrediction p;
  try {
    cfg.method = parse_method(a.method);
    if (!(a.z_minus >= 0 && std::isfinite(a.z_minus))) throw std::invalid_argument("z-minus must be non-negative");
    cfg.validate();
    p = predict(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  out << "outcome: " << to_string(p.outcome) << "\n"
      << "z_plus: " << fmt(p.z_plus) << "\n"
      << "a_plus: " << fmt(p.a_plus) << "\n"
      << "c_plus: " << fmt(p.c_plus) << "\n";
  if (!p.physically_admissible) out << "warning: amplitude beyond a/h = 0.8\n";

  json report{{"h_minus", a.h_minus}, {"h_plus", a.h_plus}, {"mu", a.mu},         {"sigma", a.sigma},
              {"u_plus", a.u_plus},   {"z_minus", a.z_minus}, {"method", a.method}};
  report["prediction"] = prediction_json(p);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  write_text(dir / "prediction.json", report.dump(2) + "\n");

  const auto entries = entries_of("predict", {{"h_minus", format_number(a.h_minus)},
                                              {"h_plus", format_number(a.h_plus)},
                                              {"mu", std::to_string(a.mu)},
                                              {"sigma", std::to_string(a.sigma)},
                                              {"u_plus", format_number(a.u_plus)},
                                              {"z_minus", format_number(a.z_minus)},
                                              {"method", a.method}});
  write_manifest({command, hash_hex(config_hash(entries)), code_version(), timer.seconds(), {"prediction.json"}},
                 dir);
  return kExitOk;
}

json measured_json(const MeasuredOutcome& m) {
  json crests = json::array();
  for (const auto& c : m.crests) {
    crests.push_back({{"x", c.x},
                      {"h", c.h},
                      {"background", c.background},
                      {"amplitude", c.amplitude},
                      {"prominence", c.prominence},
                      {"role", c.role}});
  }
  return {{"outcome", to_string(m.outcome)},
          {"a_measured", optional_number(m.a_measured)},
          {"c_measured", optional_number(m.c_measured)},
          {"x_crest", optional_number(m.x_crest)},
          {"radiation_fraction", m.radiation_fraction},
          {"crests", crests}};
}

int cmd_simulate(const SimulateArgs& a, const std::string& command, std::ostream& out, std::ostream& err) {
  Timer timer;
  RunConfig rc;
  try {
    rc = load_config(a.config);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  const fs::path dir = a.out.empty() ? rc.output_dir : fs::path(a.out);
  fs::create_directories(dir);
  RunManifest manifest{command, hash_hex(config_hash(rc.entries)), code_version(), 0, {}};

  ExperimentHooks hooks;
  const fs::path snap_dir = dir / "snapshots";
  if (rc.experiment.solver.output_every > 0) {
    fs::create_directories(snap_dir);
    hooks.on_snapshot = [&](const GridState<double>& s) {
      manifest.files.push_back((fs::path("snapshots") / write_snapshot(s, snap_dir).filename()).generic_string());
    };
  }

  const auto finish = [&](int code) {
    manifest.wall_time = timer.seconds();
    write_manifest(manifest, dir);
    return code;
  };

  ExperimentResult res;
  try {
    res = run_experiment(rc.experiment, hooks);
  } catch (const RunAborted<double>& e) {
    err << "error: run aborted at t = " << format_number(e.partial.final_state.t) << ": " << e.what() << "\n";
    write_probe_csv(e.partial.series, dir / "probes.csv");
    manifest.files.push_back("probes.csv");
    const fs::path last = write_snapshot(e.partial.final_state, dir);
    manifest.files.push_back(last.filename().generic_string());
    json status{{"status", "aborted"}, {"message", e.what()}, {"t", e.partial.final_state.t}};
    write_text(dir / "outcome.json", status.dump(2) + "\n");
    manifest.files.push_back("outcome.json");
    return finish(kExitAborted);
  } catch (const std::invalid_argument& e) {
    err << "error: " << a.config << ": " << e.what() << "\n";
    return finish(kExitUsage);
  }

  write_probe_csv(res.probes, dir / "probes.csv");
  manifest.files.push_back("probes.csv");
  const auto& c = res.config;
  json report{{"status", "completed"},
              {"t_end", c.solver.t_end},
              {"offset", c.wave.offset},
              {"steps", res.steps},
              {"cells_final", res.final_state.n_cells()},
              {"prediction", prediction_json(res.prediction)},
              {"measured", measured_json(res.measured)}};
  write_text(dir / "outcome.json", report.dump(2) + "\n");
  manifest.files.push_back("outcome.json");

  out << "predicted: " << to_string(res.prediction.outcome) << ", a_plus " << fmt(res.prediction.a_plus) << "\n"
      << "measured: " << to_string(res.measured.outcome) << ", a " << fmt(res.measured.a_measured) << ", c "
      << fmt(res.measured.c_measured) << "\n"
      << "t_end " << format_number(c.solver.t_end) << ", " << res.steps << " steps\n";
  return finish(kExitOk);
}

std::vector<SweepPoint> sweep_grid(const TableArgs& a) {
  std::vector<Curve> curves;
  if (!a.fig.empty()) {
    if (a.h_minus || a.h_plus || a.mu || a.sigma) throw UsageError("--fig cannot be combined with explicit depths or branches");
    curves = preset_curves(a.fig);
  } else {
    if (!a.h_minus || !a.h_plus || !a.mu || !a.sigma) {
      throw UsageError("give --fig or all of --h-minus, --h-plus, --mu, --sigma");
    }
    curves = {{*a.h_minus, *a.h_plus, *a.mu, *a.sigma}};
  }
  const auto z2 = parse_range(a.z2);
  for (double v : z2) {
    if (v < 0) throw UsageError("z2 values must be non-negative");
  }
  std::vector<SweepPoint> grid;
  for (const auto& c : curves) {
    if (!(c.h_minus > 0 && c.h_plus > 0)) throw UsageError("depths must be positive");
    for (double v : z2) grid.push_back({c.h_minus, c.h_plus, c.mu, c.sigma, std::sqrt(v)});
  }
  return grid;
}

int run_sweep_table(const TableArgs& a, bool simulate, const std::string& file, const std::string& cmd,
                    const std::string& command, std::ostream& out, std::ostream& err) {
  Timer timer;
  const auto grid = sweep_grid(a);
  if (grid.empty()) throw UsageError("empty grid; nothing to do");
  SweepOptions opts;
  try {
    opts.method = parse_method(a.method);
    opts.base.solver.limiter = parse_limiter(a.limiter);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(a.dx > 0)) throw UsageError("dx must be positive");
  opts.simulate = simulate;
  opts.base.dx = a.dx;
  opts.base.solver.t_end = a.t_end;
  opts.threads = a.threads;
  const auto rows = sweep_transmission(grid, opts);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  write_text(dir / file, sweep_csv(rows));
  const auto entries = entries_of(cmd, {{"fig", a.fig},
                                        {"h_minus", a.h_minus ? format_number(*a.h_minus) : ""},
                                        {"h_plus", a.h_plus ? format_number(*a.h_plus) : ""},
                                        {"mu", a.mu ? std::to_string(*a.mu) : ""},
                                        {"sigma", a.sigma ? std::to_string(*a.sigma) : ""},
                                        {"z2", a.z2},
                                        {"method", a.method},
                                        {"simulate", simulate ? "1" : "0"},
                                        {"dx", format_number(a.dx)},
                                        {"t_end", format_number(a.t_end)},
                                        {"limiter", a.limiter}});
  write_manifest({command, hash_hex(config_hash(entries)), code_version(), timer.seconds(), {file}}, dir);

  std::size_t failed = 0;
  double max_err = 0;
  bool any_err = false;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++failed;
      err << "row h-=" << format_number(r.point.h_minus) << " h+=" << format_number(r.point.h_plus)
          << " z-=" << format_number(r.point.z_minus) << ": " << r.error << "\n";
    }
    if (r.rel_err) {
      max_err = std::max(max_err, std::abs(*r.rel_err));
      any_err = true;
    }
  }
  out << rows.size() << " rows written to " << (dir / file).string() << ", " << failed << " failed\n";
  if (simulate) {
    out << "max relative error: " << (any_err ? format_number(max_err) : "-") << "\n";
  }
  return failed ? kExitRowFailure : kExitOk;
}

int cmd_compare_dsw(const TableArgs& a, const std::string& command, std::ostream& out) {
  Timer timer;
  const auto ratios = parse_range(a.ratios);
  if (ratios.empty()) throw UsageError("empty grid; nothing to do");
  for (double r : ratios) {
    if (!(r > 1)) throw UsageError("ratios must exceed 1");
  }
  DswEdgeOptions opts;
  opts.simulate = true;
  opts.h_plus = a.h_plus.value_or(1.0);
  if (!(opts.h_plus > 0)) throw UsageError("h-plus must be positive");
  if (!(a.dx > 0)) throw UsageError("dx must be positive");
  opts.dx = a.dx;
  opts.t_end = a.t_end;
  opts.threads = a.threads;
  try {
    opts.limiter = parse_limiter(a.limiter);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto rows = dsw_edge_experiment(ratios, opts);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  write_text(dir / "dsw_edge.csv", dsw_edge_csv(rows));
  const auto entries = entries_of("compare", {{"fig", "5"},
                                              {"ratios", a.ratios},
                                              {"h_plus", format_number(opts.h_plus)},
                                              {"dx", format_number(a.dx)},
                                              {"t_end", format_number(a.t_end)},
                                              {"limiter", a.limiter}});
  write_manifest({command, hash_hex(config_hash(entries)), code_version(), timer.seconds(), {"dsw_edge.csv"}}, dir);

  double max_err = 0;
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (!r.a_simulated) {
      ++failed;
      continue;
    }
    max_err = std::max(max_err, std::abs(*r.a_simulated - r.a_exact) / r.a_exact);
  }
  out << rows.size() << " rows written to " << (dir / "dsw_edge.csv").string() << ", " << failed
      << " without a simulated crest\n"
      << "max relative error: " << (failed == rows.size() ? "-" : format_number(max_err)) << "\n";
  return failed ? kExitRowFailure : kExitOk;
}

void add_table_options(CLI::App* sub, TableArgs& a) {
  sub->add_option("--h-minus", a.h_minus, "Depth on the left of the step");
  sub->add_option("--h-plus", a.h_plus, "Depth on the right of the step");
  sub->add_option("--mu", a.mu, "Mean-flow branch")->check(CLI::IsMember({-1, 1}));
  sub->add_option("--sigma", a.sigma, "Soliton branch")->check(CLI::IsMember({-1, 1}));
  sub->add_option("--z2", a.z2, "Incident z-^2 grid as a:b:n");
  sub->add_option("--method", a.method, "Invariant: exact or fitting")->check(CLI::IsMember({"exact", "fitting"}));
  sub->add_option("--dx", a.dx, "Grid spacing for simulations");
  sub->add_option("--t-end", a.t_end, "Simulation end time; 0 picks it automatically");
  sub->add_option("--limiter", a.limiter, "Slope limiter: none or minmod")->check(CLI::IsMember({"none", "minmod"}));
  sub->add_option("--threads", a.threads, "Worker threads; 0 uses SGNLAB_THREADS or all cores");
  sub->add_option("--out", a.out, "Output directory");
}

}  // namespace

std::string code_version() { return SGNLAB_VERSION; }

void write_manifest(const RunManifest& m, const fs::path& dir) {
  json j{{"command", m.command},
         {"config_hash", m.config_hash},
         {"code_version", m.code_version},
         {"wall_time_s", m.wall_time},
         {"files", m.files}};
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

std::vector<double> parse_range(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw UsageError("range '" + spec + "' is not of the form a:b:n");
  double a = 0, b = 0;
  long n = 0;
  try {
    std::size_t used = 0;
    a = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument("a");
    b = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("b");
    n = std::stol(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("n");
  } catch (const std::exception&) {
    throw UsageError("range '" + spec + "' is not of the form a:b:n");
  }
  if (n < 0) throw UsageError("range '" + spec + "' has a negative count");
  std::vector<double> v;
  for (long i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * double(i) / double(n - 1));
  return v;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solitary waves crossing rarefaction waves and dispersive shocks"};
  app.set_version_flag("--version", code_version());
  app.require_subcommand(1);

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "Transmission prediction for one incident wave");
  predict_cmd->add_option("--h-minus", pa.h_minus, "Depth on the left of the step")->required();
  predict_cmd->add_option("--h-plus", pa.h_plus, "Depth on the right of the step")->required();
  predict_cmd->add_option("--mu", pa.mu, "Mean-flow branch")->required()->check(CLI::IsMember({-1, 1}));
  predict_cmd->add_option("--sigma", pa.sigma, "Soliton branch")->required()->check(CLI::IsMember({-1, 1}));
  predict_cmd->add_option("--z-minus", pa.z_minus, "Incident z on the left")->required();
  predict_cmd->add_option("--u-plus", pa.u_plus, "Flow speed on the right");
  predict_cmd->add_option("--method", pa.method, "Invariant: exact or fitting")
      ->check(CLI::IsMember({"exact", "fitting"}));
  predict_cmd->add_option("--out", pa.out, "Directory for prediction.json");

  SimulateArgs sa;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run one configured experiment");
  simulate_cmd->add_option("--config", sa.config, "Config file")->required();
  simulate_cmd->add_option("--out", sa.out, "Output directory (overrides [output] dir)");

  TableArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Prediction table over an incident-amplitude grid");
  sweep_cmd->add_option("--fig", sw.fig, "Preset: 4c, 6 or 7b")->check(CLI::IsMember({"4c", "6", "7b"}));
  sweep_cmd->add_flag("--simulate", sw.simulate, "Also simulate every row");
  add_table_options(sweep_cmd, sw);

  TableArgs cp;
  auto* compare_cmd = app.add_subcommand("compare", "Prediction against simulation");
  compare_cmd->add_option("--fig", cp.fig, "5 (DSW edge) or a sweep preset 4c, 6, 7b")
      ->required()
      ->check(CLI::IsMember({"5", "4c", "6", "7b"}));
  compare_cmd->add_option("--ratios", cp.ratios, "Depth ratios h-/h+ as a:b:n (fig 5)");
  add_table_options(compare_cmd, cp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string command = join_command(argc, argv);
  try {
    if (*predict_cmd) return cmd_predict(pa, command, out);
    if (*simulate_cmd) return cmd_simulate(sa, command, out, err);
    if (*sweep_cmd) return run_sweep_table(sw, sw.simulate, "sweep.csv", "sweep", command, out, err);
    if (*compare_cmd) {
      if (cp.fig == "5") return cmd_compare_dsw(cp, command, out);
      return run_sweep_table(cp, true, "compare.csv", "compare", command, out, err);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRowFailure;
  }
  return kExitUsage;
}

}  // namespace sgnlab

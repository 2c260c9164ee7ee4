#include "sgnlab/solver_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sgnlab {

std::string to_string(Limiter l) { return l == Limiter::Minmod ? "minmod" : "none"; }

std::string to_string(BoundaryKind b) { return b == BoundaryKind::Periodic ? "periodic" : "outflow"; }

std::string to_string(EllipticBoundary b) {
  return b == EllipticBoundary::ZeroFlux ? "zero_flux" : "zero_value";
}

Limiter parse_limiter(const std::string& s) {
  if (s == "minmod") return Limiter::Minmod;
  if (s == "none") return Limiter::None;
  throw std::invalid_argument("unknown limiter '" + s + "' (expected minmod|none)");
}

BoundaryKind parse_boundary(const std::string& s) {
  if (s == "outflow") return BoundaryKind::Outflow;
  if (s == "periodic") return BoundaryKind::Periodic;
  throw std::invalid_argument("unknown boundary '" + s + "' (expected outflow|periodic)");
}

EllipticBoundary parse_elliptic_boundary(const std::string& s) {
  if (s == "zero_flux") return EllipticBoundary::ZeroFlux;
  if (s == "zero_value") return EllipticBoundary::ZeroValue;
  throw std::invalid_argument("unknown elliptic boundary '" + s + "' (expected zero_flux|zero_value)");
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string snapshot_name(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snap_t%.6f.csv", t);
  return buf;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + file.string() + "' for writing");
  return out;
}

}  // namespace

std::filesystem::path write_snapshot(const GridState<double>& s, const std::filesystem::path& dir) {
  const auto file = dir / snapshot_name(s.t);
  auto out = open_for_write(file);
  out << "x,h,u,varpi\n";
  for (Eigen::Index i = 0; i < s.n_cells(); ++i) {
    out << format_number(s.x(i)) << ',' << format_number(s.h[i]) << ','
        << format_number(s.hu[i] / s.h[i]) << ',' << format_number(s.varpi[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + file.string() + "'");
  return file;
}

void write_probe_csv(const ProbeSeries<double>& series, const std::filesystem::path& file) {
  auto out = open_for_write(file);
  out << 't';
  for (const auto& n : series.names) out << ',' << n;
  out << '\n';
  for (std::size_t k = 0; k < series.t.size(); ++k) {
    out << format_number(series.t[k]);
    for (double v : series.values[k]) out << ',' << format_number(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + file.string() + "'");
}

}  // namespace sgnlab

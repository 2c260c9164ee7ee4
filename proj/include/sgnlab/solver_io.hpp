// CSV output for solver snapshots and probe series.
#ifndef SGNLAB_SOLVER_IO_HPP
#define SGNLAB_SOLVER_IO_HPP

#include <filesystem>
#include <string>

#include "sgnlab/solver.hpp"

namespace sgnlab {

/// 17 significant digits, shortest form otherwise ("%.17g").
std::string format_number(double v);

/// `snap_t<time>.csv` with a 6-decimal time stamp.
std::string snapshot_name(double t);

/// Writes `x,h,u,varpi` rows into dir/snapshot_name(t); returns the path.
std::filesystem::path write_snapshot(const GridState<double>& s, const std::filesystem::path& dir);

/// Writes `t,<probe names>` rows.
void write_probe_csv(const ProbeSeries<double>& series, const std::filesystem::path& file);

}  // namespace sgnlab

#endif  // SGNLAB_SOLVER_IO_HPP

#ifndef CARNOT_IO_HPP
#define CARNOT_IO_HPP

#include <string>
#include <vector>

#include "carnot/algebra.hpp"

namespace carnot {

/// Shortest decimal string that round-trips to the same double.
std::string double_to_string(double v);

/// Algebra spec file: `dim`, `brackets` (list of [i, j, k, c] quadruples,
/// 0-based), `generators`, optional `name`. Coefficients round-trip
/// bit-exactly through their decimal strings.
LieAlgebraSpec read_algebra_file(const std::string& path);
void write_algebra_file(const std::string& path, const LieAlgebraSpec& spec);
LieAlgebraSpec parse_algebra_text(const std::string& text,
                                  const std::string& origin = "<string>");
std::string algebra_to_text(const LieAlgebraSpec& spec);

/// Curve CSV: header `t,x_1,...,x_dim`, one sample per row.
struct CurveData {
  std::vector<double> times;
  std::vector<Vec> points;
};
CurveData read_curve_csv(const std::string& path);
void write_curve_csv(const std::string& path, const CurveData& curve);
std::string curve_to_csv(const CurveData& curve);

/// Plain rectangular CSV with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
Table read_table_csv(const std::string& path);
void write_table_csv(const std::string& path, const Table& table);
std::string table_to_csv(const Table& table);

/// One manifest per CLI run; re-running with the same manifest reproduces
/// the CSV outputs byte for byte (wall time lives only in the manifest).
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> inputs;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  std::string tool_version;
  double wall_time_s = 0.0;
};
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace carnot

#endif

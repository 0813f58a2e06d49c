#pragma once

#include <string>

#include "vlq/closedloop.hpp"
#include "vlq/feedback.hpp"

namespace vlq {

/// Shortest round-trip decimal representation (printf %.17g trimmed via %g
/// precision ladder is overkill here; %.17g is always exact).
std::string format_sig(double x);

void write_file(const std::string& path, const std::string& contents);

/// Node-indexed blocks: columns k,t,<p*q row-major entries>.
void write_node_csv(const std::string& path, const NodeField& f, const TimeGrid& grid);

/// Strict lower triangle: columns i,j,t_i,t_j,<entries>.
void write_kernel_csv(const std::string& path, const KernelField& f, const TimeGrid& grid);

/// Full square (diagonal included): columns i,j,<entries>.
void write_square_csv(const std::string& path, const SquareField& f, const TimeGrid& grid);

/// Stored pyramid cells: columns i,j,k,<entries> with i >= j > k.
void write_pyramid_csv(const std::string& path, const PyramidField& f, const TimeGrid& grid);

/// One row per (path, node): path,k,t,<X entries>,<u entries or blanks>,<sX2 entries>.
void write_ensemble_csv(const std::string& path, const PathEnsemble& ensemble);

}  // namespace vlq

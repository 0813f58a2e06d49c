#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "vlq/problem.hpp"

namespace vlq {

struct RunOptions {
  std::uint64_t seed = 0;
  int n_paths = 0;
  double tolerance = 1e-6;
  std::string scheme = "direct";  // direct | dp
  int cap = 2000;
};

struct InputSpec {
  int tau_index = 0;
  bool phi1_is_table = false;
  Vector phi1_constant;               // d-vector
  std::vector<double> phi1_table;     // row-major (N+1) x d when phi1_is_table
  Vector phi2;

  InputCondition materialize(const TimeGrid& grid, int d) const;
};

struct RunConfig {
  ProblemConfig problem;
  InputSpec input;
  RunOptions run;
  // Optional constant convolution kernel for the integro-differential
  // reduction: when set, the drift table is checked against the assembled
  // running integral of this constant.
  std::optional<double> nker_constant;
};

/// Parse the JSON configuration document.  Unknown keys anywhere in the
/// document are rejected by name; missing required fields throw with the
/// field path in the message.
RunConfig parse_config(const std::string& text);

RunConfig load_config_file(const std::string& path);

}  // namespace vlq

#include "vlq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace vlq {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw std::invalid_argument("config: '" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in '" + where + "'");
}

double get_number(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key))
    throw std::invalid_argument("config: missing required field '" + where + "." + key + "'");
  if (!obj[key].is_number())
    throw std::invalid_argument("config: field '" + where + "." + key + "' must be a number");
  return obj[key].get<double>();
}

Matrix get_matrix(const json& v, const std::string& where, int rows, int cols) {
  if (v.is_number()) {
    if (rows != cols)
      throw std::invalid_argument("config: scalar for non-square matrix at '" + where + "'");
    return v.get<double>() * Matrix::Identity(rows, cols);
  }
  if (!v.is_array() || int(v.size()) != rows * cols)
    throw std::invalid_argument("config: '" + where + "' must be a row-major array of " +
                                std::to_string(rows * cols) + " numbers");
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = v[i * cols + j].get<double>();
  return M;
}

Vector get_vector(const json& v, const std::string& where, int dim) {
  if (v.is_number()) return v.get<double>() * Vector::Ones(dim);
  if (!v.is_array() || int(v.size()) != dim)
    throw std::invalid_argument("config: '" + where + "' must be an array of " +
                                std::to_string(dim) + " numbers");
  Vector out(dim);
  for (int i = 0; i < dim; ++i) out(i) = v[i].get<double>();
  return out;
}

KernelSpec parse_kernel(const json& v, const std::string& where, int rows, int cols, int N) {
  check_keys(v, where, {"family", "params"});
  if (!v.contains("family"))
    throw std::invalid_argument("config: missing '" + where + ".family'");
  const std::string fam = v["family"].get<std::string>();
  const json params = v.contains("params") ? v["params"] : json::object();

  KernelSpec s;
  if (fam == "zero") {
    check_keys(params, where + ".params", {});
    return KernelSpec::zero();
  }
  if (fam == "constant") {
    check_keys(params, where + ".params", {"value"});
    return KernelSpec::constant(params.contains("value")
                                    ? get_matrix(params["value"], where + ".params.value", rows, cols)
                                    : Matrix::Ones(rows, cols));
  }
  if (fam == "separable") {
    check_keys(params, where + ".params", {"value", "a", "b"});
    Matrix M = params.contains("value")
                   ? get_matrix(params["value"], where + ".params.value", rows, cols)
                   : Matrix::Ones(rows, cols);
    return KernelSpec::separable(M, get_number(params, where + ".params", "a"),
                                 get_number(params, where + ".params", "b"));
  }
  if (fam == "convolution") {
    check_keys(params, where + ".params", {"value", "rate"});
    Matrix M = params.contains("value")
                   ? get_matrix(params["value"], where + ".params.value", rows, cols)
                   : Matrix::Ones(rows, cols);
    return KernelSpec::convolution(M, get_number(params, where + ".params", "rate"));
  }
  if (fam == "fractional") {
    check_keys(params, where + ".params", {"c", "H", "value"});
    const double H = get_number(params, where + ".params", "H");
    if (!(H > 0.0))
      throw std::invalid_argument("config: '" + where + ".params.H' must satisfy H > 0");
    Matrix mask = params.contains("value")
                      ? get_matrix(params["value"], where + ".params.value", rows, cols)
                      : Matrix();
    return KernelSpec::fractional(get_number(params, where + ".params", "c"), H, mask);
  }
  if (fam == "table") {
    check_keys(params, where + ".params", {"values"});
    if (!params.contains("values") || !params["values"].is_array())
      throw std::invalid_argument("config: '" + where + ".params.values' array required");
    const auto& vals = params["values"];
    const std::size_t expect = std::size_t(N) * (N + 1) / 2 * rows * cols;
    if (vals.size() != expect)
      throw std::invalid_argument("config: '" + where + ".params.values' needs " +
                                  std::to_string(expect) + " numbers");
    KernelField f(N, rows, cols);
    std::size_t idx = 0;
    for (int i = 1; i <= N; ++i)
      for (int j = 0; j < i; ++j)
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c) f(i, j)(r, c) = vals[idx++].get<double>();
    return KernelSpec::explicit_table(std::move(f));
  }
  throw std::invalid_argument("config: unknown kernel family '" + fam + "' in '" + where + "'");
}

}  // namespace

InputCondition InputSpec::materialize(const TimeGrid& grid, int d) const {
  InputCondition in;
  in.k0 = tau_index;
  if (tau_index < 0 || tau_index >= grid.N)
    throw std::invalid_argument("config: input.tau_index out of range");
  if (phi1_is_table) {
    if (int(phi1_table.size()) != (grid.N + 1) * d)
      throw std::invalid_argument("config: input.phi1 table length mismatch for this grid");
    in.phi1 = NodeField(grid.N, d, 1);
    for (int k = 0; k <= grid.N; ++k)
      for (int r = 0; r < d; ++r) in.phi1(k)(r, 0) = phi1_table[std::size_t(k) * d + r];
  } else {
    in.phi1 = NodeField::constant(grid.N, phi1_constant);
  }
  in.phi2 = phi2;
  return in;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  check_keys(doc, "<top>", {"dims", "grid", "kernels", "cost", "input", "run", "reduce"});
  for (const char* req : {"dims", "grid", "kernels", "cost", "input"})
    if (!doc.contains(req))
      throw std::invalid_argument(std::string("config: missing required section '") + req + "'");

  RunConfig cfg;
  const json& dims = doc["dims"];
  check_keys(dims, "dims", {"d", "l"});
  cfg.problem.d = int(get_number(dims, "dims", "d"));
  cfg.problem.l = int(get_number(dims, "dims", "l"));
  if (cfg.problem.d < 1 || cfg.problem.l < 1)
    throw std::invalid_argument("config: dims must be positive");

  const json& grid = doc["grid"];
  check_keys(grid, "grid", {"T", "N"});
  cfg.problem.T = get_number(grid, "grid", "T");
  cfg.problem.N = int(get_number(grid, "grid", "N"));

  const int d = cfg.problem.d, l = cfg.problem.l, N = cfg.problem.N;
  const json& ker = doc["kernels"];
  check_keys(ker, "kernels", {"A", "B", "C", "D"});
  cfg.problem.A = ker.contains("A") ? parse_kernel(ker["A"], "kernels.A", d, d, N) : KernelSpec::zero();
  cfg.problem.B = ker.contains("B") ? parse_kernel(ker["B"], "kernels.B", d, l, N) : KernelSpec::zero();
  cfg.problem.C = ker.contains("C") ? parse_kernel(ker["C"], "kernels.C", d, d, N) : KernelSpec::zero();
  cfg.problem.D = ker.contains("D") ? parse_kernel(ker["D"], "kernels.D", d, l, N) : KernelSpec::zero();

  const json& cost = doc["cost"];
  check_keys(cost, "cost", {"Q", "R", "G"});
  for (const char* req : {"Q", "R", "G"})
    if (!cost.contains(req))
      throw std::invalid_argument(std::string("config: missing 'cost.") + req + "'");
  cfg.problem.Q.constant = get_matrix(cost["Q"], "cost.Q", d, d);
  cfg.problem.R.constant = get_matrix(cost["R"], "cost.R", l, l);
  cfg.problem.G = get_matrix(cost["G"], "cost.G", d, d);

  const json& input = doc["input"];
  check_keys(input, "input", {"tau_index", "phi1", "phi2"});
  cfg.input.tau_index = input.contains("tau_index") ? int(get_number(input, "input", "tau_index")) : 0;
  if (!input.contains("phi1") || !input.contains("phi2"))
    throw std::invalid_argument("config: input.phi1 and input.phi2 are required");
  {
    const json& p1 = input["phi1"];
    check_keys(p1, "input.phi1", {"family", "params"});
    const std::string fam = p1.contains("family") ? p1["family"].get<std::string>() : "constant";
    const json params = p1.contains("params") ? p1["params"] : json::object();
    if (fam == "constant") {
      check_keys(params, "input.phi1.params", {"value"});
      cfg.input.phi1_constant = params.contains("value")
                                    ? get_vector(params["value"], "input.phi1.params.value", d)
                                    : Vector::Zero(d);
    } else if (fam == "table") {
      check_keys(params, "input.phi1.params", {"values"});
      cfg.input.phi1_is_table = true;
      if (!params.contains("values") || !params["values"].is_array() ||
          int(params["values"].size()) != (N + 1) * d)
        throw std::invalid_argument("config: input.phi1.params.values needs (N+1)*d numbers");
      for (const auto& x : params["values"]) cfg.input.phi1_table.push_back(x.get<double>());
    } else {
      throw std::invalid_argument("config: unknown input.phi1.family '" + fam + "'");
    }
  }
  cfg.input.phi2 = get_vector(input["phi2"], "input.phi2", d);

  if (doc.contains("run")) {
    const json& run = doc["run"];
    check_keys(run, "run", {"seed", "n_paths", "tolerance", "scheme", "cap"});
    if (run.contains("seed")) cfg.run.seed = run["seed"].get<std::uint64_t>();
    if (run.contains("n_paths")) cfg.run.n_paths = int(get_number(run, "run", "n_paths"));
    if (run.contains("tolerance")) cfg.run.tolerance = get_number(run, "run", "tolerance");
    if (run.contains("cap")) cfg.run.cap = int(get_number(run, "run", "cap"));
    if (run.contains("scheme")) {
      cfg.run.scheme = run["scheme"].get<std::string>();
      if (cfg.run.scheme != "direct" && cfg.run.scheme != "dp")
        throw std::invalid_argument("config: run.scheme must be 'direct' or 'dp'");
    }
  }
  if (doc.contains("reduce")) {
    const json& red = doc["reduce"];
    check_keys(red, "reduce", {"nker_constant"});
    if (red.contains("nker_constant"))
      cfg.nker_constant = get_number(red, "reduce", "nker_constant");
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace vlq

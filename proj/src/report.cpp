#include "vlq/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace vlq {

namespace {

void append_block(std::string& line, const Matrix& M) {
  // Row-major order in the CSV regardless of Eigen's internal layout.
  for (int r = 0; r < M.rows(); ++r)
    for (int c = 0; c < M.cols(); ++c) {
      line += ',';
      line += format_sig(M(r, c));
    }
}

std::string entry_header(const char* prefix, int p, int q) {
  std::string h;
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < q; ++c)
      h += "," + std::string(prefix) + std::to_string(r) + std::to_string(c);
  return h;
}

}  // namespace

std::string format_sig(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_file(const std::string& path, const std::string& contents) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << contents;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void write_node_csv(const std::string& path, const NodeField& f, const TimeGrid& grid) {
  std::string s = "k,t" + entry_header("v", f.rows(), f.cols()) + "\n";
  for (int k = 0; k <= f.N(); ++k) {
    s += std::to_string(k) + ',' + format_sig(grid.node(k));
    append_block(s, f(k));
    s += '\n';
  }
  write_file(path, s);
}

void write_kernel_csv(const std::string& path, const KernelField& f, const TimeGrid& grid) {
  std::string s = "i,j,t_i,t_j" + entry_header("v", f.rows(), f.cols()) + "\n";
  for (int i = 1; i <= f.N(); ++i)
    for (int j = 0; j < i; ++j) {
      s += std::to_string(i) + ',' + std::to_string(j) + ',' + format_sig(grid.node(i)) + ',' +
           format_sig(grid.node(j));
      append_block(s, f(i, j));
      s += '\n';
    }
  write_file(path, s);
}

void write_square_csv(const std::string& path, const SquareField& f, const TimeGrid& grid) {
  (void)grid;
  std::string s = "i,j" + entry_header("v", f.rows(), f.cols()) + "\n";
  for (int i = 0; i <= f.N(); ++i)
    for (int j = 0; j <= f.N(); ++j) {
      s += std::to_string(i) + ',' + std::to_string(j);
      append_block(s, f(i, j));
      s += '\n';
    }
  write_file(path, s);
}

void write_pyramid_csv(const std::string& path, const PyramidField& f, const TimeGrid& grid) {
  (void)grid;
  std::string s = "i,j,k" + entry_header("v", f.dim(), f.dim()) + "\n";
  for (int k = 0; k < f.N(); ++k)
    for (int j = k + 1; j <= f.N(); ++j)
      for (int i = j; i <= f.N(); ++i) {
        s += std::to_string(i) + ',' + std::to_string(j) + ',' + std::to_string(k);
        append_block(s, f.get(i, j, k));
        s += '\n';
      }
  write_file(path, s);
}

void write_ensemble_csv(const std::string& path, const PathEnsemble& ensemble) {
  const int d = ensemble.d, l = ensemble.l;
  std::string s =
      "path,k,t" + entry_header("X", d, 1) + entry_header("u", l, 1) + entry_header("sX2", d, 1) + "\n";
  for (std::size_t p = 0; p < ensemble.paths.size(); ++p) {
    const SimPath& sp = ensemble.paths[p];
    for (int k = ensemble.k0; k <= ensemble.grid.N; ++k) {
      s += std::to_string(p) + ',' + std::to_string(k) + ',' + format_sig(ensemble.grid.node(k));
      append_block(s, sp.X(k));
      if (k < ensemble.grid.N) {
        append_block(s, sp.u(k));
      } else {
        for (int i = 0; i < l; ++i) s += ",";
      }
      append_block(s, sp.sX2(k));
      s += '\n';
    }
  }
  write_file(path, s);
}

}  // namespace vlq

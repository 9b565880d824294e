#pragma once

#include <cmath>
#include <set>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "demandcast/dataio.hpp"
#include "demandcast/numerics.hpp"

namespace testing {

inline demandcast::Matrix random_matrix(demandcast::Rng& rng, std::size_t rows, std::size_t cols,
                                        double lo = -1.0, double hi = 1.0) {
  demandcast::Matrix m(rows, cols);
  for (double& v : m.entries()) v = lo + (hi - lo) * rng.uniform();
  return m;
}

inline demandcast::PatternSet make_patterns(demandcast::Matrix inputs,
                                            std::vector<double> targets) {
  demandcast::PatternSet p;
  p.lag_count = inputs.cols();
  p.targets = demandcast::Matrix::column(targets);
  p.inputs = std::move(inputs);
  return p;
}

inline double max_abs_diff(const demandcast::Matrix& a, const demandcast::Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.entries()[i] - b.entries()[i]));
  }
  return worst;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() /
           (name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace testing

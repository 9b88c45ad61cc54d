#pragma once

// CSV matrix I/O: row-major values, one row per line, with an optional
// leading "# rows cols" header.

#include "psphere/core.hpp"

#include <Eigen/Core>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace psphere {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  std::vector<std::vector<double>> rows;
  long declared_rows = -1, declared_cols = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line[0] == '#') {
      std::istringstream hs(line.substr(1));
      hs >> declared_rows >> declared_cols;
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      row.push_back(std::stod(cell));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no data");
  if (declared_rows >= 0 &&
      (declared_rows != static_cast<long>(rows.size()) ||
       declared_cols != static_cast<long>(rows.front().size()))) {
    throw IoError(path + ": header dimensions disagree with data");
  }
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m,
                             bool header = true) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(17);
  if (header) out << "# " << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

}  // namespace psphere

#include "psphere/io.hpp"
#include "psphere/rng.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace psphere;

namespace {

std::filesystem::path tmp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("csv round trip with header") {
  Rng rng(301);
  const Eigen::MatrixXd m = rng.normal_mat(4, 3);
  const auto path = tmp_file("psphere_io_roundtrip.csv");
  write_csv_matrix(path.string(), m);
  const Eigen::MatrixXd back = read_csv_matrix(path.string());
  CHECK(back.rows() == 4);
  CHECK(back.cols() == 3);
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);  // 17 digits: exact
  std::filesystem::remove(path);
}

TEST_CASE("csv without header is accepted") {
  const auto path = tmp_file("psphere_io_noheader.csv");
  write_text(path, "1,2\n3,4\n");
  const Eigen::MatrixXd m = read_csv_matrix(path.string());
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 1) == 4.0);
  std::filesystem::remove(path);
}

TEST_CASE("csv errors") {
  CHECK_THROWS_AS(read_csv_matrix("/nonexistent/psphere.csv"), IoError);

  const auto ragged = tmp_file("psphere_io_ragged.csv");
  write_text(ragged, "1,2\n3\n");
  CHECK_THROWS_AS(read_csv_matrix(ragged.string()), IoError);
  std::filesystem::remove(ragged);

  const auto empty = tmp_file("psphere_io_empty.csv");
  write_text(empty, "");
  CHECK_THROWS_AS(read_csv_matrix(empty.string()), IoError);
  std::filesystem::remove(empty);

  const auto mismatch = tmp_file("psphere_io_mismatch.csv");
  write_text(mismatch, "# 3 2\n1,2\n3,4\n");
  CHECK_THROWS_AS(read_csv_matrix(mismatch.string()), IoError);
  std::filesystem::remove(mismatch);
}

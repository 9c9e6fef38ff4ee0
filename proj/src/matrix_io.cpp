#include "gqmp/matrix_io.hpp"

namespace gqmp {

using nlohmann::json;

namespace {

json entries_to_json(const Mat& m) {
  json entries = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      entries.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    }
  }
  return entries;
}

Mat entries_from_json(const json& entries, int rows, int cols) {
  if (!entries.is_array() || static_cast<int>(entries.size()) != rows * cols) {
    throw std::invalid_argument("matrix literal: expected " + std::to_string(rows * cols) +
                                " entries, got " + std::to_string(entries.size()));
  }
  Mat m(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j, ++k) {
      const json& e = entries[k];
      if (!e.is_array() || e.size() != 2) {
        throw std::invalid_argument("matrix literal: entry " + std::to_string(k) +
                                    " is not a [re, im] pair");
      }
      m(i, j) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

}  // namespace

json matrix_to_json(const Mat& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries_to_json(m)}};
}

json hermitian_to_json(const HermitianMatrix& a) {
  return json{{"dim", a.dim()}, {"entries", entries_to_json(a.mat())}};
}

Mat matrix_from_json(const json& j) {
  if (j.contains("dim")) {
    const int n = j.at("dim").get<int>();
    return entries_from_json(j.at("entries"), n, n);
  }
  if (!j.contains("rows") || !j.contains("cols")) {
    throw std::invalid_argument("matrix literal: missing rows/cols (or dim) field");
  }
  return entries_from_json(j.at("entries"), j.at("rows").get<int>(), j.at("cols").get<int>());
}

HermitianMatrix hermitian_from_json(const json& j) {
  if (!j.contains("dim")) {
    throw std::invalid_argument("matrix literal: Hermitian literal requires a dim field");
  }
  return HermitianMatrix(matrix_from_json(j));
}

}  // namespace gqmp

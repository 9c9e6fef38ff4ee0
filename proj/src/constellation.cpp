#include "gqmp/constellation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace gqmp {
namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void check_unit_energy(const Constellation& c) {
  double energy = 0.0;
  for (const Complex& p : c.points) energy += std::norm(p);
  energy /= static_cast<double>(c.points.size());
  if (std::abs(energy - 1.0) > 1e-12)
    throw std::logic_error("constellation '" + c.name + "' is not unit average energy");
}

// Lexicographic key for exact-equality deduplication of difference vectors.
using DiffKey = std::vector<std::pair<double, double>>;

DiffKey key_of(const Eigen::VectorXcd& v) {
  DiffKey k(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) k[static_cast<std::size_t>(i)] = {v(i).real(), v(i).imag()};
  return k;
}

}  // namespace

Constellation make_constellation(const std::string& name) {
  const std::string id = lowercase(name);
  Constellation c;
  c.name = id;
  if (id == "bpsk") {
    c.points = {Complex(1.0, 0.0), Complex(-1.0, 0.0)};
  } else if (id == "qpsk") {
    const double s = 1.0 / std::sqrt(2.0);
    for (double re : {1.0, -1.0})
      for (double im : {1.0, -1.0}) c.points.emplace_back(re * s, im * s);
  } else if (id == "psk8") {
    for (int k = 0; k < 8; ++k) {
      const double phi = M_PI * k / 4.0;
      c.points.emplace_back(std::cos(phi), std::sin(phi));
    }
  } else if (id == "qam16") {
    const double s = 1.0 / std::sqrt(10.0);
    for (double re : {-3.0, -1.0, 1.0, 3.0})
      for (double im : {-3.0, -1.0, 1.0, 3.0}) c.points.emplace_back(re * s, im * s);
  } else {
    throw std::invalid_argument("unknown constellation '" + name +
                                "' (supported: bpsk, qpsk, psk8, qam16)");
  }
  check_unit_energy(c);
  return c;
}

DifferenceTable make_difference_table(const Constellation& c, int dims) {
  if (dims < 1) throw std::invalid_argument("difference table needs at least one dimension");
  const int q = c.order();
  if (q < 2) throw std::invalid_argument("constellation must have at least two points");

  long long m_ll = 1;
  for (int t = 0; t < dims; ++t) {
    m_ll *= q;
    if (m_ll > 4096) throw std::invalid_argument("difference table limited to 4096 joint symbols");
  }
  const int m_count = static_cast<int>(m_ll);

  // Joint symbol m has digit t = (m / q^(dims-1-t)) % q, coordinate 0 most
  // significant.
  std::vector<Eigen::VectorXcd> symbols(static_cast<std::size_t>(m_count));
  for (int m = 0; m < m_count; ++m) {
    Eigen::VectorXcd x(dims);
    int rem = m;
    for (int t = dims - 1; t >= 0; --t) {
      x(t) = c.points[static_cast<std::size_t>(rem % q)];
      rem /= q;
    }
    symbols[static_cast<std::size_t>(m)] = x;
  }

  DifferenceTable table;
  table.dims = dims;
  table.symbol_count = m_count;
  table.index.assign(static_cast<std::size_t>(m_count) * m_count, -1);

  std::map<DiffKey, int> seen;
  for (int m = 0; m < m_count; ++m) {
    for (int n = 0; n < m_count; ++n) {
      const Eigen::VectorXcd d = symbols[static_cast<std::size_t>(m)] - symbols[static_cast<std::size_t>(n)];
      const DiffKey k = key_of(d);
      auto it = seen.find(k);
      int id;
      if (it == seen.end()) {
        id = static_cast<int>(table.diffs.size());
        table.diffs.push_back(d);
        seen.emplace(std::move(k), id);
      } else {
        id = it->second;
      }
      table.index[static_cast<std::size_t>(m) * m_count + n] = id;
    }
  }
  return table;
}

DifferenceTable mask_table(const DifferenceTable& table, const std::vector<int>& zero_coords) {
  for (int c : zero_coords)
    if (c < 0 || c >= table.dims) throw std::invalid_argument("masked coordinate out of range");

  DifferenceTable out;
  out.dims = table.dims;
  out.symbol_count = table.symbol_count;
  out.index.assign(table.index.size(), -1);

  // Masked copies of the existing unique vectors, then re-deduplicate (the
  // mask makes formerly distinct vectors collide).
  std::vector<int> remap(table.diffs.size(), -1);
  std::map<DiffKey, int> seen;
  for (std::size_t u = 0; u < table.diffs.size(); ++u) {
    Eigen::VectorXcd d = table.diffs[u];
    for (int c : zero_coords) d(c) = Complex(0.0, 0.0);
    const DiffKey k = key_of(d);
    auto it = seen.find(k);
    if (it == seen.end()) {
      remap[u] = static_cast<int>(out.diffs.size());
      out.diffs.push_back(std::move(d));
      seen.emplace(std::move(k), remap[u]);
    } else {
      remap[u] = it->second;
    }
  }
  for (std::size_t i = 0; i < table.index.size(); ++i)
    out.index[i] = remap[static_cast<std::size_t>(table.index[i])];
  return out;
}

}  // namespace gqmp

#pragma once

#include <string>
#include <vector>

#include "gqmp/hermitian.hpp"

namespace gqmp {

// Unit-average-energy signal constellations and the joint-symbol difference
// tables consumed by the finite-alphabet mutual-information oracles.

struct Constellation {
  std::string name;
  std::vector<Complex> points;  // distinct, average energy 1 within 1e-12
  int order() const { return static_cast<int>(points.size()); }
};

// Supported names (case-insensitive): "bpsk", "qpsk", "psk8", "qam16".
// Throws std::invalid_argument for anything else.
Constellation make_constellation(const std::string& name);

// All pairwise differences x_m - x_n between the M = Q^dims joint symbols of
// X^dims, stored deduplicated: many pairs share one difference vector, and
// pair_index(m, n) maps a pair to its vector. Joint symbols are enumerated
// with coordinate 0 as the most significant base-Q digit.
struct DifferenceTable {
  int dims = 0;
  int symbol_count = 0;                 // M = Q^dims
  std::vector<Eigen::VectorXcd> diffs;  // unique difference vectors
  std::vector<int> index;               // M*M entries, row-major over (m, n)

  int pair_index(int m, int n) const {
    return index[static_cast<std::size_t>(m) * symbol_count + n];
  }
  const Eigen::VectorXcd& diff(int m, int n) const { return diffs[pair_index(m, n)]; }
};

// Throws std::invalid_argument when dims < 1 or Q^dims exceeds 4096 joint
// symbols (the M^2 pair index stays small at that cap).
DifferenceTable make_difference_table(const Constellation& c, int dims);

// Same table with the listed coordinates zeroed in every difference vector,
// re-deduplicated. Stacked multi-user layouts use this to erase one user's
// block when forming per-user rate terms.
DifferenceTable mask_table(const DifferenceTable& table, const std::vector<int>& zero_coords);

}  // namespace gqmp

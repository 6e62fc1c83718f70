#pragma once

#include <span>
#include <vector>

#include "coordination/joint_dist.hpp"

namespace coord {

// Joint relative frequencies of symbol tuples along equal-length sequences,
// one sequence (of symbol indices) per variable. Entries are occurrence
// counts divided by the common length n >= 1.
JointDist empirical_distribution(const std::vector<Alphabet>& variables,
                                 std::span<const std::vector<int>> sequences);

// Strong typicality: total variation between the empirical joint of the
// sequences and `target` is below `tol`. The variables are taken from
// `target`; sequences must be given in the same variable order.
bool is_typical(std::span<const std::vector<int>> sequences, const JointDist& target,
                double tol);

}  // namespace coord

#pragma once

#include <span>
#include <string>
#include <vector>

#include "coordination/joint_dist.hpp"

namespace coord {

// Base-2 binary entropy; 0 log 0 := 0. Throws std::domain_error outside [0,1].
double binary_entropy(double p);

// Conditional entropy H(of | given) in bits. `of` and `given` must be
// disjoint subsets of j's variables; either may be empty.
double entropy(const JointDist& j, std::span<const std::string> of,
               std::span<const std::string> given = {});

// Conditional mutual information I(a ; b | given) in bits.
double mutual_information(const JointDist& j, std::span<const std::string> a,
                          std::span<const std::string> b,
                          std::span<const std::string> given = {});

// Real-valued score per symbol tuple, defined on a full product alphabet.
class ObjectiveFn {
public:
    ObjectiveFn(std::vector<Alphabet> variables, std::vector<double> table);

    const std::vector<Alphabet>& variables() const { return vars_; }
    const std::vector<double>& table() const { return table_; }

private:
    std::vector<Alphabet> vars_;
    std::vector<double> table_;
};

// E[phi] under j; linear in phi. Throws ShapeMismatchError if the variable
// lists differ.
double expected_objective(const JointDist& j, const ObjectiveFn& phi);

}  // namespace coord

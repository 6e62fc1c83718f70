#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coordination/kernel.hpp"

namespace coord {

// Dense probability tensor over an ordered list of named finite alphabets.
// Immutable after construction; entries are nonnegative and sum to one
// within 1e-12. Storage is row-major with the last variable fastest.
class JointDist {
public:
    JointDist(std::vector<Alphabet> variables, std::vector<double> mass);

    const std::vector<Alphabet>& variables() const { return vars_; }
    int variable_count() const { return static_cast<int>(vars_.size()); }

    // position of a named variable; throws VariableMismatchError if unknown
    int variable_index(std::string_view name) const;
    bool has_variable(std::string_view name) const;

    std::size_t cell_count() const { return mass_.size(); }
    const std::vector<double>& mass() const { return mass_; }
    double mass_at(std::size_t flat) const { return mass_[flat]; }
    double mass_at(std::span<const int> symbols) const { return mass_[flat_index(symbols)]; }

    std::size_t flat_index(std::span<const int> symbols) const;
    void unflatten(std::size_t flat, std::span<int> out) const;

    bool same_shape(const JointDist& other) const { return vars_ == other.vars_; }

private:
    std::vector<Alphabet> vars_;
    std::vector<double> mass_;
    std::vector<std::size_t> strides_;
};

// Chained product of conditional factors. Each factor may condition only on
// variables produced by earlier factors; the produced variables must be new.
// The result's variable order is the factors' production order.
JointDist joint_from_factors(std::span<const Kernel> factors);

// Sum out all variables not in `keep`. The result's variables follow the
// order of `keep`, so this doubles as a permutation when `keep` lists all
// variables.
JointDist marginalize(const JointDist& j, std::span<const std::string> keep);

// Conditional of the remaining variables given `given` (a strict subset).
// Rows whose conditioning tuple has zero mass are filled with the uniform
// vector and flagged on the returned kernel.
Kernel condition(const JointDist& j, std::span<const std::string> given);

double total_variation(const JointDist& p, const JointDist& q);

}  // namespace coord

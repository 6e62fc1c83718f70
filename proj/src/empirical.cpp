#include "coordination/empirical.hpp"

#include <stdexcept>
#include <string>

#include "coordination/errors.hpp"

namespace coord {

JointDist empirical_distribution(const std::vector<Alphabet>& variables,
                                 std::span<const std::vector<int>> sequences) {
    if (variables.size() != sequences.size()) {
        throw ShapeMismatchError("got " + std::to_string(sequences.size()) + " sequences for " +
                                 std::to_string(variables.size()) + " variables");
    }
    if (sequences.empty()) throw std::invalid_argument("no sequences given");
    const std::size_t n = sequences[0].size();
    if (n == 0) throw std::invalid_argument("sequences must have length >= 1");
    for (std::size_t v = 0; v < sequences.size(); ++v) {
        if (sequences[v].size() != n) {
            throw std::invalid_argument("sequence for '" + variables[v].name() + "' has length " +
                                        std::to_string(sequences[v].size()) + ", expected " +
                                        std::to_string(n));
        }
    }

    std::size_t cells = 1;
    for (const auto& a : variables) cells *= static_cast<std::size_t>(a.size());
    std::vector<std::size_t> counts(cells, 0);

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t idx = 0;
        for (std::size_t v = 0; v < variables.size(); ++v) {
            const int s = sequences[v][i];
            if (s < 0 || s >= variables[v].size()) {
                throw std::out_of_range("symbol index " + std::to_string(s) + " at position " +
                                        std::to_string(i) + " not in alphabet '" +
                                        variables[v].name() + "'");
            }
            idx = idx * static_cast<std::size_t>(variables[v].size()) + static_cast<std::size_t>(s);
        }
        ++counts[idx];
    }

    std::vector<double> mass(cells, 0.0);
    for (std::size_t i = 0; i < cells; ++i) {
        mass[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
    }
    return JointDist(variables, std::move(mass));
}

bool is_typical(std::span<const std::vector<int>> sequences, const JointDist& target,
                double tol) {
    if (!(tol > 0.0)) throw std::domain_error("typicality tolerance must be positive");
    const JointDist emp = empirical_distribution(target.variables(), sequences);
    return total_variation(emp, target) < tol;
}

}  // namespace coord

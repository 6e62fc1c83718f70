#include "coordination/info.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "coordination/errors.hpp"

namespace coord {

namespace {

// Shannon entropy of the marginal onto the variables at `pos`, in bits.
double subset_entropy(const JointDist& j, std::span<const int> pos) {
    std::size_t cells = 1;
    for (int p : pos) cells *= static_cast<std::size_t>(j.variables()[static_cast<std::size_t>(p)].size());

    std::vector<double> marg(cells, 0.0);
    std::vector<int> sym(j.variables().size(), 0);
    for (std::size_t flat = 0; flat < j.cell_count(); ++flat) {
        j.unflatten(flat, sym);
        std::size_t idx = 0;
        for (int p : pos) {
            idx = idx * static_cast<std::size_t>(j.variables()[static_cast<std::size_t>(p)].size()) +
                  static_cast<std::size_t>(sym[static_cast<std::size_t>(p)]);
        }
        marg[idx] += j.mass_at(flat);
    }
    long double h = 0.0L;
    for (double v : marg) {
        if (v > 0.0) h -= static_cast<long double>(v) * std::log2(v);
    }
    return static_cast<double>(h);
}

std::vector<int> resolve(const JointDist& j, std::span<const std::string> names) {
    std::vector<int> pos;
    pos.reserve(names.size());
    for (const auto& n : names) pos.push_back(j.variable_index(n));
    return pos;
}

void require_disjoint(std::span<const std::string> a, std::span<const std::string> b,
                      const char* what) {
    std::unordered_set<std::string> seen(a.begin(), a.end());
    for (const auto& n : b) {
        if (seen.count(n)) {
            throw VariableMismatchError(std::string(what) + ": variable '" + n +
                                        "' appears in two subsets");
        }
    }
}

std::vector<int> concat(std::vector<int> a, std::span<const int> b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::domain_error("binary_entropy argument " + std::to_string(p) +
                                " outside [0, 1]");
    }
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

double entropy(const JointDist& j, std::span<const std::string> of,
               std::span<const std::string> given) {
    require_disjoint(of, given, "entropy");
    const std::vector<int> of_pos = resolve(j, of);
    const std::vector<int> given_pos = resolve(j, given);
    const std::vector<int> both = concat(of_pos, given_pos);
    const double h_both = subset_entropy(j, both);
    const double h_given = given_pos.empty() ? 0.0 : subset_entropy(j, given_pos);
    return h_both - h_given;
}

double mutual_information(const JointDist& j, std::span<const std::string> a,
                          std::span<const std::string> b,
                          std::span<const std::string> given) {
    require_disjoint(a, b, "mutual_information");
    require_disjoint(a, given, "mutual_information");
    require_disjoint(b, given, "mutual_information");
    const std::vector<int> pa = resolve(j, a);
    const std::vector<int> pb = resolve(j, b);
    const std::vector<int> pg = resolve(j, given);

    // I(A;B|G) = H(A,G) + H(B,G) - H(G) - H(A,B,G)
    const std::vector<int> ag = concat(pa, pg);
    const std::vector<int> bg = concat(pb, pg);
    const std::vector<int> abg = concat(concat(pa, pb), pg);
    double value = subset_entropy(j, ag) + subset_entropy(j, bg) - subset_entropy(j, abg);
    if (!pg.empty()) value -= subset_entropy(j, pg);
    return value;
}

ObjectiveFn::ObjectiveFn(std::vector<Alphabet> variables, std::vector<double> table)
    : vars_(std::move(variables)), table_(std::move(table)) {
    std::size_t cells = 1;
    for (const auto& v : vars_) cells *= static_cast<std::size_t>(v.size());
    if (table_.size() != cells) {
        throw ShapeMismatchError("objective table has " + std::to_string(table_.size()) +
                                 " cells, expected " + std::to_string(cells));
    }
}

double expected_objective(const JointDist& j, const ObjectiveFn& phi) {
    if (!(j.variables() == phi.variables())) {
        throw ShapeMismatchError("objective and distribution variable lists differ");
    }
    long double acc = 0.0L;
    for (std::size_t i = 0; i < j.cell_count(); ++i) {
        acc += static_cast<long double>(j.mass_at(i)) * phi.table()[i];
    }
    return static_cast<double>(acc);
}

}  // namespace coord

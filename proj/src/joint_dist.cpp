#include "coordination/joint_dist.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "coordination/errors.hpp"

namespace coord {

namespace {

constexpr double kMassTol = 1e-12;

std::vector<std::size_t> make_strides(const std::vector<Alphabet>& vars) {
    std::vector<std::size_t> strides(vars.size(), 1);
    for (int i = static_cast<int>(vars.size()) - 2; i >= 0; --i) {
        strides[static_cast<std::size_t>(i)] =
            strides[static_cast<std::size_t>(i) + 1] *
            static_cast<std::size_t>(vars[static_cast<std::size_t>(i) + 1].size());
    }
    return strides;
}

}  // namespace

JointDist::JointDist(std::vector<Alphabet> variables, std::vector<double> mass)
    : vars_(std::move(variables)), mass_(std::move(mass)) {
    if (vars_.empty()) throw std::invalid_argument("joint distribution needs at least one variable");
    std::unordered_set<std::string> names;
    std::size_t cells = 1;
    for (const auto& a : vars_) {
        if (!names.insert(a.name()).second) {
            throw VariableMismatchError("duplicate variable '" + a.name() + "'");
        }
        cells *= static_cast<std::size_t>(a.size());
    }
    if (mass_.size() != cells) {
        throw ShapeMismatchError("mass has " + std::to_string(mass_.size()) + " cells, expected " +
                                 std::to_string(cells));
    }
    long double sum = 0.0L;
    for (double v : mass_) {
        if (v < 0.0 || !std::isfinite(v)) {
            throw std::invalid_argument("joint distribution has a negative or non-finite entry");
        }
        sum += v;
    }
    if (std::fabs(static_cast<double>(sum) - 1.0) > kMassTol) {
        throw std::invalid_argument("joint distribution mass sums to " +
                                    std::to_string(static_cast<double>(sum)));
    }
    strides_ = make_strides(vars_);
}

int JointDist::variable_index(std::string_view name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i].name() == name) return static_cast<int>(i);
    }
    throw VariableMismatchError("unknown variable '" + std::string(name) + "'");
}

bool JointDist::has_variable(std::string_view name) const {
    for (const auto& v : vars_) {
        if (v.name() == name) return true;
    }
    return false;
}

std::size_t JointDist::flat_index(std::span<const int> symbols) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        idx += strides_[i] * static_cast<std::size_t>(symbols[i]);
    }
    return idx;
}

void JointDist::unflatten(std::size_t flat, std::span<int> out) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        out[i] = static_cast<int>(flat / strides_[i]);
        flat %= strides_[i];
    }
}

JointDist joint_from_factors(std::span<const Kernel> factors) {
    if (factors.empty()) throw std::invalid_argument("no factors given");

    std::vector<Alphabet> vars;
    for (const auto& f : factors) {
        for (const auto& a : f.from()) {
            bool found = false;
            for (const auto& v : vars) {
                if (v.name() == a.name()) {
                    if (!(v == a)) {
                        throw VariableMismatchError("factor conditions on variable '" + a.name() +
                                                    "' with a different alphabet");
                    }
                    found = true;
                    break;
                }
            }
            if (!found) {
                throw VariableMismatchError("factor conditions on variable '" + a.name() +
                                            "' before it is introduced");
            }
        }
        for (const auto& a : f.to()) {
            for (const auto& v : vars) {
                if (v.name() == a.name()) {
                    throw VariableMismatchError("variable '" + a.name() + "' introduced twice");
                }
            }
            vars.push_back(a);
        }
    }

    // positions of each factor's from/to variables in the final order
    struct FactorMap {
        std::vector<int> from_pos;
        std::vector<int> to_pos;
    };
    auto pos_of = [&vars](const Alphabet& a) {
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (vars[i].name() == a.name()) return static_cast<int>(i);
        }
        return -1;
    };
    std::vector<FactorMap> maps;
    maps.reserve(factors.size());
    for (const auto& f : factors) {
        FactorMap m;
        for (const auto& a : f.from()) m.from_pos.push_back(pos_of(a));
        for (const auto& a : f.to()) m.to_pos.push_back(pos_of(a));
        maps.push_back(std::move(m));
    }

    std::size_t cells = 1;
    for (const auto& v : vars) cells *= static_cast<std::size_t>(v.size());

    std::vector<double> mass(cells, 0.0);
    std::vector<int> sym(vars.size(), 0);
    std::vector<int> tuple;
    for (std::size_t flat = 0; flat < cells; ++flat) {
        std::size_t rest = flat;
        for (int i = static_cast<int>(vars.size()) - 1; i >= 0; --i) {
            const auto s = static_cast<std::size_t>(vars[static_cast<std::size_t>(i)].size());
            sym[static_cast<std::size_t>(i)] = static_cast<int>(rest % s);
            rest /= s;
        }
        double p = 1.0;
        for (std::size_t k = 0; k < factors.size() && p > 0.0; ++k) {
            tuple.clear();
            for (int pos : maps[k].from_pos) tuple.push_back(sym[static_cast<std::size_t>(pos)]);
            const std::size_t r = factors[k].row_index(tuple);
            tuple.clear();
            for (int pos : maps[k].to_pos) tuple.push_back(sym[static_cast<std::size_t>(pos)]);
            const std::size_t c = factors[k].col_index(tuple);
            p *= factors[k].row(r)[c];
        }
        mass[flat] = p;
    }
    return JointDist(std::move(vars), std::move(mass));
}

namespace {

std::vector<int> positions_of(const JointDist& j, std::span<const std::string> names) {
    std::vector<int> pos;
    pos.reserve(names.size());
    std::unordered_set<std::string> seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second) throw VariableMismatchError("variable '" + n + "' listed twice");
        pos.push_back(j.variable_index(n));
    }
    return pos;
}

}  // namespace

JointDist marginalize(const JointDist& j, std::span<const std::string> keep) {
    const std::vector<int> pos = positions_of(j, keep);
    std::vector<Alphabet> vars;
    vars.reserve(pos.size());
    for (int p : pos) vars.push_back(j.variables()[static_cast<std::size_t>(p)]);

    std::size_t cells = 1;
    for (const auto& v : vars) cells *= static_cast<std::size_t>(v.size());

    std::vector<double> mass(cells, 0.0);
    std::vector<int> sym(j.variables().size(), 0);
    for (std::size_t flat = 0; flat < j.cell_count(); ++flat) {
        j.unflatten(flat, sym);
        std::size_t idx = 0;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            idx = idx * static_cast<std::size_t>(vars[i].size()) +
                  static_cast<std::size_t>(sym[static_cast<std::size_t>(pos[i])]);
        }
        mass[idx] += j.mass_at(flat);
    }
    return JointDist(std::move(vars), std::move(mass));
}

Kernel condition(const JointDist& j, std::span<const std::string> given) {
    const std::vector<int> given_pos = positions_of(j, given);
    if (given_pos.size() >= j.variables().size()) {
        throw VariableMismatchError("conditioning set must be a strict subset of the variables");
    }
    std::vector<int> to_pos;
    for (int i = 0; i < j.variable_count(); ++i) {
        bool in_given = false;
        for (int g : given_pos) {
            if (g == i) { in_given = true; break; }
        }
        if (!in_given) to_pos.push_back(i);
    }

    std::vector<Alphabet> from_vars, to_vars;
    for (int p : given_pos) from_vars.push_back(j.variables()[static_cast<std::size_t>(p)]);
    for (int p : to_pos) to_vars.push_back(j.variables()[static_cast<std::size_t>(p)]);

    std::size_t n_rows = 1, width = 1;
    for (const auto& v : from_vars) n_rows *= static_cast<std::size_t>(v.size());
    for (const auto& v : to_vars) width *= static_cast<std::size_t>(v.size());

    std::vector<std::vector<double>> rows(n_rows, std::vector<double>(width, 0.0));
    std::vector<int> sym(j.variables().size(), 0);
    for (std::size_t flat = 0; flat < j.cell_count(); ++flat) {
        j.unflatten(flat, sym);
        std::size_t r = 0, c = 0;
        for (std::size_t i = 0; i < given_pos.size(); ++i) {
            r = r * static_cast<std::size_t>(from_vars[i].size()) +
                static_cast<std::size_t>(sym[static_cast<std::size_t>(given_pos[i])]);
        }
        for (std::size_t i = 0; i < to_pos.size(); ++i) {
            c = c * static_cast<std::size_t>(to_vars[i].size()) +
                static_cast<std::size_t>(sym[static_cast<std::size_t>(to_pos[i])]);
        }
        rows[r][c] += j.mass_at(flat);
    }

    std::vector<std::uint8_t> filled(n_rows, 0);
    for (std::size_t r = 0; r < n_rows; ++r) {
        long double sum = 0.0L;
        for (double v : rows[r]) sum += v;
        if (sum <= 0.0L) {
            const double u = 1.0 / static_cast<double>(width);
            for (auto& v : rows[r]) v = u;
            filled[r] = 1;
        } else {
            for (auto& v : rows[r]) v /= static_cast<double>(sum);
        }
    }

    Kernel k(std::move(from_vars), std::move(to_vars), std::move(rows));
    k.mark_uniform_filled(std::move(filled));
    return k;
}

double total_variation(const JointDist& p, const JointDist& q) {
    if (!p.same_shape(q)) {
        throw ShapeMismatchError("total variation requires identical variable lists");
    }
    long double acc = 0.0L;
    for (std::size_t i = 0; i < p.cell_count(); ++i) {
        acc += std::fabs(p.mass_at(i) - q.mass_at(i));
    }
    return 0.5 * static_cast<double>(acc);
}

}  // namespace coord

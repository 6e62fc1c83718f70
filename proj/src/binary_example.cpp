#include "coordination/binary_example.hpp"

#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "coordination/info.hpp"

namespace coord {

namespace {

void check_params(const ExampleParams& p) {
    if (!(p.alpha >= 0.0 && p.alpha <= kAlphaMax)) {
        throw std::domain_error("alpha " + std::to_string(p.alpha) + " outside [0, 7/8]");
    }
    if (!(p.noise >= 0.0 && p.noise <= 0.5)) {
        throw std::domain_error("noise " + std::to_string(p.noise) + " outside [0, 0.5]");
    }
}

}  // namespace

CoordinationProblem make_target(const ExampleParams& params) {
    check_params(params);
    const Alphabet u = numeric_alphabet("U", 2);
    const Alphabet x = numeric_alphabet("X", 2);
    const Alphabet y = numeric_alphabet("Y", 2);
    std::vector<std::string> v_symbols;
    for (int i = 1; i <= 8; ++i) v_symbols.push_back(std::to_string(i));
    const Alphabet v("V", v_symbols);

    const double e = params.noise;
    Kernel source = Kernel::distribution(u, {0.5, 0.5});
    Kernel input = Kernel::distribution(x, {0.5, 0.5});
    Kernel channel({x}, {y}, {{1.0 - e, e}, {e, 1.0 - e}});

    // matched symbol v = 1 + 4u + 2x + y gets 1 - alpha, the rest alpha/7
    std::vector<std::vector<double>> rows;
    for (int uu = 0; uu < 2; ++uu) {
        for (int xx = 0; xx < 2; ++xx) {
            for (int yy = 0; yy < 2; ++yy) {
                const int matched = 4 * uu + 2 * xx + yy;  // 0-based index of symbol 1+4u+2x+y
                std::vector<double> row(8, params.alpha / 7.0);
                row[static_cast<std::size_t>(matched)] = 1.0 - params.alpha;
                rows.push_back(std::move(row));
            }
        }
    }
    Kernel target({u, x, y}, {v}, std::move(rows));

    return CoordinationProblem{SettingId::SC_ENC_FB, std::move(source), std::move(channel),
                               std::move(input), std::move(target)};
}

double constraint_closed_form(const ExampleParams& params) {
    check_params(params);
    const double a = params.alpha;
    return binary_entropy(a) - binary_entropy(params.noise) - binary_entropy(6.0 * a / 7.0) +
           a * (std::log2(7.0) - (6.0 / 7.0) * std::log2(3.0));
}

double lossy_constraint(const ExampleParams& params) {
    check_params(params);
    return binary_entropy(params.alpha) - binary_entropy(params.noise);
}

double alpha_star(double noise) {
    if (!(noise >= 0.0 && noise <= 0.5)) {
        throw std::domain_error("noise " + std::to_string(noise) + " outside [0, 0.5]");
    }
    auto f = [noise](double a) { return constraint_closed_form({a, noise}); };
    double lo = 0.0, hi = kAlphaMax;
    const double f_lo = f(lo);
    if (f_lo >= 0.0) return 0.0;            // constraint nonnegative from the start
    if (f(hi) <= 0.0) return kAlphaMax;     // no sign change on the interval
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

CurveTable emit_curves(double noise, int grid) {
    if (grid < 2) throw std::domain_error("grid must be >= 2");
    if (!(noise >= 0.0 && noise <= 0.5)) {
        throw std::domain_error("noise " + std::to_string(noise) + " outside [0, 0.5]");
    }
    CurveTable table;
    table.constraint_rows.reserve(static_cast<std::size_t>(grid));
    for (int i = 0; i < grid; ++i) {
        const double a = kAlphaMax * static_cast<double>(i) / static_cast<double>(grid - 1);
        table.constraint_rows.push_back(
            {a, constraint_closed_form({a, noise}), lossy_constraint({a, noise})});
    }
    table.alpha_star_rows.reserve(static_cast<std::size_t>(grid));
    for (int i = 0; i < grid; ++i) {
        const double e = 0.5 * static_cast<double>(i) / static_cast<double>(grid - 1);
        table.alpha_star_rows.push_back({e, alpha_star(e)});
    }
    return table;
}

namespace {

void write_row(std::ostream& os, std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os << ',';
        os << values[i];
    }
    os << '\n';
}

}  // namespace

void write_constraint_csv(std::ostream& os, const CurveTable& table) {
    os << "alpha,coord_constraint,lossy_constraint\n";
    for (const auto& row : table.constraint_rows) write_row(os, row);
}

void write_alpha_star_csv(std::ostream& os, const CurveTable& table) {
    os << "epsilon,alpha_star\n";
    for (const auto& row : table.alpha_star_rows) write_row(os, row);
}

}  // namespace coord

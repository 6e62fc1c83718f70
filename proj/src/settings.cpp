#include "coordination/settings.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "coordination/errors.hpp"

namespace coord {

namespace {

constexpr double kDefaultInfoTol = 1e-9;

const std::array<std::pair<SettingId, std::string_view>, 6> kSettingNames = {{
    {SettingId::SC_ENC_FB, "SC_ENC_FB"},
    {SettingId::CAUSAL_ENC_FB, "CAUSAL_ENC_FB"},
    {SettingId::SC_ENC_NOFB, "SC_ENC_NOFB"},
    {SettingId::SC_DEC_NOFB, "SC_DEC_NOFB"},
    {SettingId::SC_DEC_FB, "SC_DEC_FB"},
    {SettingId::CAUSAL_DEC_FB, "CAUSAL_DEC_FB"},
}};

using Names = std::vector<std::string>;

void add_check(ValidationReport& report, std::string label, double residual, double tol) {
    const bool ok = residual <= tol;
    report.checks.push_back({std::move(label), residual, tol, ok});
    if (!ok) report.passed = false;
}

// max over positive-mass conditioning rows of the TV between the joint's
// conditional and the reference kernel's row
double kernel_row_residual(const JointDist& joint, const Names& given, const Kernel& reference) {
    Names scope = given;
    for (const auto& a : reference.to()) scope.push_back(a.name());
    const JointDist relevant = marginalize(joint, scope);
    const Kernel actual = condition(relevant, given);
    if (actual.row_count() != reference.row_count() ||
        actual.row_width() != reference.row_width()) {
        throw ShapeMismatchError("conditional shape does not match the reference kernel");
    }
    const JointDist given_marg = marginalize(joint, given);
    double worst = 0.0;
    for (std::size_t r = 0; r < actual.row_count(); ++r) {
        if (given_marg.mass_at(r) <= 0.0) continue;
        double tv = 0.0;
        for (std::size_t c = 0; c < actual.row_width(); ++c) {
            tv += std::fabs(actual.row(r)[c] - reference.row(r)[c]);
        }
        worst = std::max(worst, 0.5 * tv);
    }
    return worst;
}

void require_base_variables(const JointDist& joint) {
    for (const char* name : {"U", "X", "Y", "V"}) {
        if (!joint.has_variable(name)) {
            throw VariableMismatchError(std::string("expected variable '") + name + "'");
        }
    }
}

[[noreturn]] void throw_admissibility(const CheckEntry& entry) {
    std::ostringstream os;
    os << "violated condition '" << entry.label << "' (residual " << entry.residual
       << ", tolerance " << entry.tolerance << ")";
    throw AdmissibilityError(os.str());
}

}  // namespace

std::string_view to_string(SettingId id) {
    for (const auto& [sid, name] : kSettingNames) {
        if (sid == id) return name;
    }
    return "?";
}

SettingId setting_from_string(std::string_view name) {
    for (const auto& [sid, sname] : kSettingNames) {
        if (sname == name) return sid;
    }
    throw std::invalid_argument("unknown setting '" + std::string(name) + "'");
}

bool setting_has_auxiliary(SettingId id) {
    return id == SettingId::CAUSAL_ENC_FB || id == SettingId::SC_ENC_NOFB ||
           id == SettingId::SC_DEC_NOFB || id == SettingId::CAUSAL_DEC_FB;
}

std::string_view auxiliary_name(SettingId id) {
    switch (id) {
        case SettingId::CAUSAL_ENC_FB: return "W";
        case SettingId::SC_ENC_NOFB: return "W2";
        case SettingId::SC_DEC_NOFB: return "W1";
        case SettingId::CAUSAL_DEC_FB: return "W3";
        default:
            throw std::invalid_argument("setting " + std::string(to_string(id)) +
                                        " has no auxiliary variable");
    }
}

std::vector<std::string> base_variable_names() { return {"U", "X", "Y", "V"}; }

std::vector<std::string> extended_variable_names(SettingId id) {
    return {"U", std::string(auxiliary_name(id)), "X", "Y", "V"};
}

JointDist target_joint(const CoordinationProblem& problem) {
    std::vector<Kernel> factors{problem.source, problem.input_policy, problem.channel};
    switch (problem.setting) {
        case SettingId::SC_ENC_FB:
        case SettingId::SC_ENC_NOFB:
        case SettingId::CAUSAL_ENC_FB:
        case SettingId::CAUSAL_DEC_FB: {
            if (!problem.target_kernel) {
                throw std::invalid_argument("setting " + std::string(to_string(problem.setting)) +
                                            " requires a target kernel");
            }
            factors.push_back(*problem.target_kernel);
            break;
        }
        case SettingId::SC_DEC_NOFB:
        case SettingId::SC_DEC_FB:
            // the input policy introduces (X, V) jointly
            break;
    }
    const JointDist composed = joint_from_factors(factors);
    const Names order = base_variable_names();
    return marginalize(composed, order);
}

std::vector<CheckEntry> ValidationReport::violations() const {
    std::vector<CheckEntry> out;
    for (const auto& c : checks) {
        if (!c.ok) out.push_back(c);
    }
    return out;
}

double ValidationReport::max_residual() const {
    double worst = 0.0;
    for (const auto& c : checks) {
        if (!c.ok) worst = std::max(worst, c.residual);
    }
    return worst;
}

double ValidationReport::worst_margin() const {
    double worst = 0.0;
    for (const auto& c : checks) worst = std::max(worst, c.residual);
    return worst;
}

ValidationReport validate_decomposition(const CoordinationProblem& problem,
                                        const JointDist& joint) {
    require_base_variables(joint);
    ValidationReport report;

    const Names u{"U"}, x{"X"}, y{"Y"};
    const JointDist u_marg = marginalize(joint, u);
    double source_tv = 0.0;
    for (int i = 0; i < u_marg.variables()[0].size(); ++i) {
        source_tv += std::fabs(u_marg.mass_at(static_cast<std::size_t>(i)) -
                               problem.source.row(0)[static_cast<std::size_t>(i)]);
    }
    add_check(report, "source-marginal", 0.5 * source_tv, 1e-9);
    add_check(report, "channel-consistency", kernel_row_residual(joint, x, problem.channel), 1e-9);

    const bool decoder_side =
        problem.setting == SettingId::SC_DEC_NOFB || problem.setting == SettingId::SC_DEC_FB;
    if (decoder_side) {
        const Names uv{"U", "V"};
        add_check(report, "markov-y-x-uv", mutual_information(joint, uv, y, x), kDefaultInfoTol);
    } else {
        add_check(report, "markov-y-x-u", mutual_information(joint, u, y, x), kDefaultInfoTol);
    }
    if (problem.setting == SettingId::SC_ENC_FB) {
        add_check(report, "u-independent-of-x", mutual_information(joint, u, x), kDefaultInfoTol);
    }
    return report;
}

namespace {

// Structural conditions (no target needed). Labels are stable strings.
std::vector<CheckEntry> structural_conditions(SettingId setting, const JointDist& e,
                                              double tol) {
    std::vector<CheckEntry> out;
    auto push = [&](std::string label, double residual) {
        out.push_back({std::move(label), residual, tol, residual <= tol});
    };
    const Names u{"U"}, x{"X"}, y{"Y"}, v{"V"};
    const Names uv{"U", "V"}, w{"W"}, uw{"U", "W"}, uyw{"U", "Y", "W"};
    const Names uw2{"U", "W2"}, xyw2{"X", "Y", "W2"}, uvw1{"U", "V", "W1"};
    const Names uw3{"U", "W3"}, ux{"U", "X"}, yw3{"Y", "W3"};
    switch (setting) {
        case SettingId::SC_ENC_FB:
            push("u-independent-of-x", mutual_information(e, u, x));
            push("markov-y-x-u", mutual_information(e, u, y, x));
            break;
        case SettingId::SC_DEC_FB:
            push("markov-y-x-uv", mutual_information(e, uv, y, x));
            break;
        case SettingId::CAUSAL_ENC_FB:
            push("u-independent-of-w", mutual_information(e, u, w));
            push("markov-y-x-uw", mutual_information(e, uw, y, x));
            push("markov-v-uyw-x", mutual_information(e, v, x, uyw));
            break;
        case SettingId::SC_ENC_NOFB:
            push("u-independent-of-x", mutual_information(e, u, x));
            push("markov-y-x-uw2", mutual_information(e, uw2, y, x));
            push("markov-v-xyw2-u", mutual_information(e, v, u, xyw2));
            break;
        case SettingId::SC_DEC_NOFB:
            push("markov-y-x-uvw1", mutual_information(e, uvw1, y, x));
            break;
        case SettingId::CAUSAL_DEC_FB:
            push("markov-y-x-uw3", mutual_information(e, uw3, y, x));
            push("markov-v-yw3-ux", mutual_information(e, v, ux, yw3));
            break;
    }
    return out;
}

}  // namespace

double objective_value(SettingId setting, const JointDist& e) {
    const Names u{"U"}, x{"X"}, y{"Y"}, v{"V"};
    const Names xy{"X", "Y"}, uv{"U", "V"}, w{"W"}, wy{"W", "Y"};
    const Names w2{"W2"}, w1{"W1"}, vw1{"V", "W1"}, uw3{"U", "W3"}, w3{"W3"};
    switch (setting) {
        case SettingId::SC_ENC_FB:
            return mutual_information(e, x, y) - mutual_information(e, u, v, xy);
        case SettingId::SC_DEC_FB:
            return mutual_information(e, x, y, uv) - mutual_information(e, u, v);
        case SettingId::CAUSAL_ENC_FB:
            return mutual_information(e, w, y) - mutual_information(e, u, v, wy);
        case SettingId::SC_ENC_NOFB:
            return mutual_information(e, x, y) - mutual_information(e, u, w2, x);
        case SettingId::SC_DEC_NOFB:
            return mutual_information(e, w1, y, v) - mutual_information(e, u, vw1);
        case SettingId::CAUSAL_DEC_FB:
            return mutual_information(e, x, y, uw3) - mutual_information(e, u, w3);
    }
    throw std::logic_error("unreachable");
}

double evaluate_objective(SettingId setting, const JointDist& extended,
                          double admissibility_tol) {
    if (!setting_has_auxiliary(setting)) {
        throw std::invalid_argument("setting " + std::string(to_string(setting)) +
                                    " has no auxiliary variable");
    }
    if (!extended.has_variable(auxiliary_name(setting))) {
        throw VariableMismatchError("extended distribution lacks auxiliary variable '" +
                                    std::string(auxiliary_name(setting)) + "'");
    }
    for (const auto& entry : structural_conditions(setting, extended, admissibility_tol)) {
        if (!entry.ok) throw_admissibility(entry);
    }
    return objective_value(setting, extended);
}

double constraint_sc_feedback(const JointDist& joint) {
    require_base_variables(joint);
    for (const auto& entry : structural_conditions(SettingId::SC_ENC_FB, joint, 1e-6)) {
        if (!entry.ok) throw_admissibility(entry);
    }
    return objective_value(SettingId::SC_ENC_FB, joint);
}

double constraint_sd_feedback(const JointDist& joint) {
    require_base_variables(joint);
    for (const auto& entry : structural_conditions(SettingId::SC_DEC_FB, joint, 1e-6)) {
        if (!entry.ok) throw_admissibility(entry);
    }
    return objective_value(SettingId::SC_DEC_FB, joint);
}

ValidationReport check_admissible(SettingId setting, const JointDist& extended,
                                  const JointDist& target, double marginal_tol,
                                  double info_tol) {
    ValidationReport report;
    if (!setting_has_auxiliary(setting)) {
        report.checks.push_back({"setting-has-auxiliary", 1.0, 0.0, false});
        report.passed = false;
        return report;
    }
    const JointDist marg = marginalize(extended, base_variable_names());
    const JointDist target_canonical =
        target.same_shape(marg) ? target : marginalize(target, base_variable_names());
    add_check(report, "marginal-consistency", total_variation(marg, target_canonical),
              marginal_tol);
    for (auto entry : structural_conditions(setting, extended, info_tol)) {
        report.checks.push_back(entry);
        if (!entry.ok) report.passed = false;
    }
    return report;
}

RateWindow rate_window(const JointDist& extended, double delta) {
    if (!(delta > 0.0)) throw std::domain_error("delta must be positive");
    if (!extended.has_variable("W")) {
        throw VariableMismatchError("rate window needs an extended distribution with W");
    }
    for (const auto& entry : structural_conditions(SettingId::CAUSAL_ENC_FB, extended, 1e-6)) {
        if (!entry.ok) throw_admissibility(entry);
    }
    const Names uy{"U", "Y"}, v{"V"}, w{"W"}, wv{"W", "V"}, y{"Y"};
    RateWindow win;
    win.r_min = mutual_information(extended, uy, v, w) + delta;
    win.r_max = mutual_information(extended, wv, y) - delta;
    win.feasible = win.r_min <= win.r_max;
    return win;
}

JointDist embed_w_equals_x(const JointDist& target) {
    require_base_variables(target);
    const JointDist canonical = marginalize(target, base_variable_names());
    const auto& vars = canonical.variables();
    const Alphabet& x_alpha = vars[1];
    const Alphabet w_alpha("W", x_alpha.symbols());

    std::vector<Alphabet> evars{vars[0], w_alpha, vars[1], vars[2], vars[3]};
    std::size_t cells = canonical.cell_count() * static_cast<std::size_t>(x_alpha.size());
    std::vector<double> mass(cells, 0.0);

    const std::size_t nx = static_cast<std::size_t>(x_alpha.size());
    const std::size_t ny = static_cast<std::size_t>(vars[2].size());
    const std::size_t nv = static_cast<std::size_t>(vars[3].size());
    std::vector<int> sym(4, 0);
    for (std::size_t flat = 0; flat < canonical.cell_count(); ++flat) {
        canonical.unflatten(flat, sym);
        const auto [u, x, y, v] = std::array<int, 4>{sym[0], sym[1], sym[2], sym[3]};
        // (u, w=x, x, y, v)
        std::size_t idx = (((static_cast<std::size_t>(u) * nx + static_cast<std::size_t>(x)) * nx +
                            static_cast<std::size_t>(x)) * ny + static_cast<std::size_t>(y)) * nv +
                          static_cast<std::size_t>(v);
        mass[idx] = canonical.mass_at(flat);
    }
    return JointDist(std::move(evars), std::move(mass));
}

}  // namespace coord

#include "coordination/aux_opt.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>

#include "coordination/errors.hpp"

namespace coord {

namespace {

using Matrix = std::vector<std::vector<double>>;
using Names = std::vector<std::string>;

constexpr double kDeriveResidualTol = 1e-7;
constexpr double kDeriveBoundSlack = 1e-9;

void normalize_row(std::vector<double>& row) {
    double sum = 0.0;
    for (double v : row) sum += v;
    if (sum <= 0.0) {
        const double u = 1.0 / static_cast<double>(row.size());
        for (auto& v : row) v = u;
        return;
    }
    for (auto& v : row) v /= sum;
}

// Euclidean projection onto the probability simplex
void project_row(std::vector<double>& row) {
    std::vector<double> sorted = row;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumulative = 0.0, theta = 0.0;
    int support = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cumulative += sorted[i];
        const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (sorted[i] - t > 0.0) {
            theta = t;
            support = static_cast<int>(i + 1);
        }
    }
    (void)support;
    for (auto& v : row) v = std::max(0.0, v - theta);
    normalize_row(row);
}

// ---------------------------------------------------------------------------
// Per-setting search structure: fixed factors, free kernel shapes, and the
// canonical variable order of the composed extension.
// ---------------------------------------------------------------------------

struct FreeSpec {
    std::vector<Alphabet> from;
    std::vector<Alphabet> to;

    std::size_t rows() const {
        std::size_t n = 1;
        for (const auto& a : from) n *= static_cast<std::size_t>(a.size());
        return n;
    }
    std::size_t width() const {
        std::size_t n = 1;
        for (const auto& a : to) n *= static_cast<std::size_t>(a.size());
        return n;
    }
};

struct Structure {
    SettingId setting = SettingId::CAUSAL_ENC_FB;
    JointDist target;             // canonical (U,X,Y,V)
    Alphabet u, x, y, v, aux;
    Kernel source;                // exact
    Kernel channel;               // exact
    std::vector<FreeSpec> specs;
    Names canonical;              // U, aux, X, Y, V
    // fixed target-derived conditionals used in composition / repair
    Kernel x_given_u;             // for CAUSAL_DEC_FB composition
    Kernel x_dist;                // for SC_ENC_NOFB composition
    Kernel xv_given_u;            // for SC_DEC_NOFB composition
};

Kernel conditional_from(const JointDist& j, const Names& scope, const Names& given) {
    return condition(marginalize(j, scope), given);
}

Structure make_structure(SettingId setting, const CoordinationProblem& problem,
                         int aux_cardinality) {
    if (!setting_has_auxiliary(setting)) {
        throw std::invalid_argument("setting " + std::string(to_string(setting)) +
                                    " has no auxiliary variable");
    }
    JointDist target = target_joint(problem);
    const auto& vars = target.variables();
    Structure s{setting,
                target,
                vars[0],
                vars[1],
                vars[2],
                vars[3],
                numeric_alphabet(std::string(auxiliary_name(setting)), aux_cardinality),
                problem.source,
                problem.channel,
                {},
                {"U", std::string(auxiliary_name(setting)), "X", "Y", "V"},
                conditional_from(target, {"U", "X"}, {"U"}),
                Kernel::distribution(vars[1], marginalize(target, Names{"X"}).mass()),
                conditional_from(target, {"U", "X", "V"}, {"U"})};

    switch (setting) {
        case SettingId::CAUSAL_ENC_FB:
            s.specs = {FreeSpec{{}, {s.aux}},            // Q(w)
                       FreeSpec{{s.u, s.aux}, {s.x}},    // Q(x|u,w)
                       FreeSpec{{s.u, s.y, s.aux}, {s.v}}};  // Q(v|u,y,w)
            break;
        case SettingId::SC_ENC_NOFB:
            s.specs = {FreeSpec{{s.u, s.x}, {s.aux}},          // Q(w2|u,x)
                       FreeSpec{{s.y, s.x, s.aux}, {s.v}}};    // Q(v|y,x,w2)
            break;
        case SettingId::SC_DEC_NOFB:
            s.specs = {FreeSpec{{s.u, s.x, s.v}, {s.aux}}};    // Q(w1|u,x,v)
            break;
        case SettingId::CAUSAL_DEC_FB:
            s.specs = {FreeSpec{{s.u, s.x}, {s.aux}},    // Q(w3|u,x)
                       FreeSpec{{s.y, s.aux}, {s.v}}};   // Q(v|y,w3)
            break;
        default:
            break;
    }
    return s;
}

JointDist compose(const Structure& s, const std::vector<Matrix>& theta) {
    std::vector<Matrix> clean = theta;
    for (auto& kernel : clean) {
        for (auto& row : kernel) normalize_row(row);
    }
    std::vector<Kernel> factors;
    switch (s.setting) {
        case SettingId::CAUSAL_ENC_FB:
            factors = {s.source, Kernel(s.specs[0].from, s.specs[0].to, clean[0]),
                       Kernel(s.specs[1].from, s.specs[1].to, clean[1]), s.channel,
                       Kernel(s.specs[2].from, s.specs[2].to, clean[2])};
            break;
        case SettingId::SC_ENC_NOFB:
            factors = {s.source, s.x_dist, Kernel(s.specs[0].from, s.specs[0].to, clean[0]),
                       s.channel, Kernel(s.specs[1].from, s.specs[1].to, clean[1])};
            break;
        case SettingId::SC_DEC_NOFB:
            factors = {s.source, s.xv_given_u, Kernel(s.specs[0].from, s.specs[0].to, clean[0]),
                       s.channel};
            break;
        case SettingId::CAUSAL_DEC_FB:
            factors = {s.source, s.x_given_u, Kernel(s.specs[0].from, s.specs[0].to, clean[0]),
                       s.channel, Kernel(s.specs[1].from, s.specs[1].to, clean[1])};
            break;
        default:
            break;
    }
    return marginalize(joint_from_factors(factors), s.canonical);
}

std::vector<Matrix> uniform_theta(const Structure& s) {
    std::vector<Matrix> theta;
    for (const auto& spec : s.specs) {
        theta.emplace_back(spec.rows(),
                           std::vector<double>(spec.width(), 1.0 / static_cast<double>(spec.width())));
    }
    return theta;
}

std::vector<Matrix> random_theta(const Structure& s, Rng& rng) {
    std::vector<Matrix> theta;
    for (const auto& spec : s.specs) {
        Matrix m;
        m.reserve(spec.rows());
        for (std::size_t r = 0; r < spec.rows(); ++r) {
            std::vector<double> row(spec.width());
            double sum = 0.0;
            for (auto& val : row) {
                val = rng.exponential() + 1e-12;
                sum += val;
            }
            for (auto& val : row) val /= sum;
            m.push_back(std::move(row));
        }
        theta.push_back(std::move(m));
    }
    return theta;
}

Matrix kernel_rows(const Kernel& k) {
    Matrix m;
    m.reserve(k.row_count());
    for (std::size_t r = 0; r < k.row_count(); ++r) {
        m.emplace_back(k.row(r).begin(), k.row(r).end());
    }
    return m;
}

// factor conditionals of an extension, in the structure's free-kernel order
std::vector<Matrix> extract_theta(const Structure& s, const JointDist& e) {
    const std::string w = s.aux.name();
    switch (s.setting) {
        case SettingId::CAUSAL_ENC_FB:
            return {
                {marginalize(e, Names{w}).mass()},
                kernel_rows(conditional_from(e, {"U", w, "X"}, {"U", w})),
                kernel_rows(conditional_from(e, {"U", "Y", w, "V"}, {"U", "Y", w})),
            };
        case SettingId::SC_ENC_NOFB:
            return {
                kernel_rows(conditional_from(e, {"U", "X", w}, {"U", "X"})),
                kernel_rows(conditional_from(e, {"Y", "X", w, "V"}, {"Y", "X", w})),
            };
        case SettingId::SC_DEC_NOFB:
            return {
                kernel_rows(conditional_from(e, {"U", "X", "V", w}, {"U", "X", "V"})),
            };
        case SettingId::CAUSAL_DEC_FB:
            return {
                kernel_rows(conditional_from(e, {"U", "X", w}, {"U", "X"})),
                kernel_rows(conditional_from(e, {"Y", w, "V"}, {"Y", w})),
            };
        default:
            throw std::logic_error("unreachable");
    }
}

double marginal_sq_gap(const Structure& s, const JointDist& e) {
    const JointDist marg = marginalize(e, base_variable_names());
    double acc = 0.0;
    for (std::size_t i = 0; i < marg.cell_count(); ++i) {
        const double d = marg.mass_at(i) - s.target.mass_at(i);
        acc += d * d;
    }
    return acc;
}

double marginal_tv_gap(const Structure& s, const JointDist& e) {
    return total_variation(marginalize(e, base_variable_names()), s.target);
}

// ---------------------------------------------------------------------------
// Witnesses: explicitly constructed members of the family
// ---------------------------------------------------------------------------

std::vector<std::vector<Matrix>> witness_thetas(const Structure& s) {
    std::vector<std::vector<Matrix>> out;
    const int K = s.aux.size();
    const JointDist& t = s.target;

    // constant aux: point mass on symbol 0, aux-independent conditionals
    {
        std::vector<Matrix> theta = uniform_theta(s);
        switch (s.setting) {
            case SettingId::CAUSAL_ENC_FB: {
                theta[0][0].assign(static_cast<std::size_t>(K), 0.0);
                theta[0][0][0] = 1.0;
                const Kernel xg = conditional_from(t, {"U", "X"}, {"U"});
                for (int u = 0; u < s.u.size(); ++u) {
                    for (int w = 0; w < K; ++w) {
                        theta[1][static_cast<std::size_t>(u * K + w)]
                            .assign(xg.row(static_cast<std::size_t>(u)).begin(),
                                    xg.row(static_cast<std::size_t>(u)).end());
                    }
                }
                const Kernel vg = conditional_from(t, {"U", "Y", "V"}, {"U", "Y"});
                for (int u = 0; u < s.u.size(); ++u) {
                    for (int y = 0; y < s.y.size(); ++y) {
                        for (int w = 0; w < K; ++w) {
                            theta[2][static_cast<std::size_t>((u * s.y.size() + y) * K + w)]
                                .assign(vg.row(static_cast<std::size_t>(u * s.y.size() + y)).begin(),
                                        vg.row(static_cast<std::size_t>(u * s.y.size() + y)).end());
                        }
                    }
                }
                break;
            }
            case SettingId::SC_ENC_NOFB: {
                for (auto& row : theta[0]) {
                    row.assign(static_cast<std::size_t>(K), 0.0);
                    row[0] = 1.0;
                }
                const Kernel vg = conditional_from(t, {"Y", "X", "V"}, {"Y", "X"});
                for (int y = 0; y < s.y.size(); ++y) {
                    for (int x = 0; x < s.x.size(); ++x) {
                        for (int w = 0; w < K; ++w) {
                            theta[1][static_cast<std::size_t>((y * s.x.size() + x) * K + w)]
                                .assign(vg.row(static_cast<std::size_t>(y * s.x.size() + x)).begin(),
                                        vg.row(static_cast<std::size_t>(y * s.x.size() + x)).end());
                        }
                    }
                }
                break;
            }
            case SettingId::SC_DEC_NOFB: {
                for (auto& row : theta[0]) {
                    row.assign(static_cast<std::size_t>(K), 0.0);
                    row[0] = 1.0;
                }
                break;
            }
            case SettingId::CAUSAL_DEC_FB: {
                for (auto& row : theta[0]) {
                    row.assign(static_cast<std::size_t>(K), 0.0);
                    row[0] = 1.0;
                }
                const Kernel vg = conditional_from(t, {"Y", "V"}, {"Y"});
                for (int y = 0; y < s.y.size(); ++y) {
                    for (int w = 0; w < K; ++w) {
                        theta[1][static_cast<std::size_t>(y * K + w)]
                            .assign(vg.row(static_cast<std::size_t>(y)).begin(),
                                    vg.row(static_cast<std::size_t>(y)).end());
                    }
                }
                break;
            }
            default:
                break;
        }
        out.push_back(std::move(theta));
    }

    // W = X: aux copies the channel input (causal feedback family only)
    if (s.setting == SettingId::CAUSAL_ENC_FB && K >= s.x.size()) {
        std::vector<Matrix> theta = uniform_theta(s);
        const JointDist xm = marginalize(t, Names{"X"});
        theta[0][0].assign(static_cast<std::size_t>(K), 0.0);
        for (int xx = 0; xx < s.x.size(); ++xx) {
            theta[0][0][static_cast<std::size_t>(xx)] = xm.mass_at(static_cast<std::size_t>(xx));
        }
        const Kernel vg = conditional_from(t, {"U", "X", "Y", "V"}, {"U", "X", "Y"});
        for (int u = 0; u < s.u.size(); ++u) {
            for (int w = 0; w < K; ++w) {
                auto& row = theta[1][static_cast<std::size_t>(u * K + w)];
                row.assign(static_cast<std::size_t>(s.x.size()), 0.0);
                if (w < s.x.size()) {
                    row[static_cast<std::size_t>(w)] = 1.0;
                } else {
                    normalize_row(row);
                }
            }
            for (int y = 0; y < s.y.size(); ++y) {
                for (int w = 0; w < K && w < s.x.size(); ++w) {
                    const std::size_t from = static_cast<std::size_t>(
                        (u * s.x.size() + w) * s.y.size() + y);
                    theta[2][static_cast<std::size_t>((u * s.y.size() + y) * K + w)]
                        .assign(vg.row(from).begin(), vg.row(from).end());
                }
            }
        }
        out.push_back(std::move(theta));
    }

    // W2 = V: aux copies the reconstruction (no-feedback comparison family)
    if (s.setting == SettingId::SC_ENC_NOFB && K >= s.v.size()) {
        std::vector<Matrix> theta = uniform_theta(s);
        const Kernel vg = conditional_from(t, {"U", "X", "V"}, {"U", "X"});
        for (int u = 0; u < s.u.size(); ++u) {
            for (int x = 0; x < s.x.size(); ++x) {
                auto& row = theta[0][static_cast<std::size_t>(u * s.x.size() + x)];
                row.assign(static_cast<std::size_t>(K), 0.0);
                for (int vv = 0; vv < s.v.size(); ++vv) {
                    row[static_cast<std::size_t>(vv)] =
                        vg.row(static_cast<std::size_t>(u * s.x.size() + x))[static_cast<std::size_t>(vv)];
                }
            }
        }
        for (int y = 0; y < s.y.size(); ++y) {
            for (int x = 0; x < s.x.size(); ++x) {
                for (int w = 0; w < K; ++w) {
                    auto& row = theta[1][static_cast<std::size_t>((y * s.x.size() + x) * K + w)];
                    row.assign(static_cast<std::size_t>(s.v.size()), 0.0);
                    if (w < s.v.size()) {
                        row[static_cast<std::size_t>(w)] = 1.0;
                    } else {
                        normalize_row(row);
                    }
                }
            }
        }
        out.push_back(std::move(theta));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Multistart projected ascent
// ---------------------------------------------------------------------------

struct Candidate {
    JointDist extended;
    double value = 0.0;
    double residual = 0.0;
};

bool candidate_better(const Candidate& a, const Candidate& b, double feas_tol) {
    const bool fa = a.residual <= feas_tol, fb = b.residual <= feas_tol;
    if (fa != fb) return fa;
    if (std::fabs(a.value - b.value) > 1e-12) return a.value > b.value;
    if (std::fabs(a.residual - b.residual) > 1e-15) return a.residual < b.residual;
    return std::lexicographical_compare(a.extended.mass().begin(), a.extended.mass().end(),
                                        b.extended.mass().begin(), b.extended.mass().end());
}

Candidate realize(const Structure& s, const JointDist& e) {
    return Candidate{e, objective_value(s.setting, e),
                     check_admissible(s.setting, e, s.target).worst_margin()};
}

double penalized_value(const Structure& s, const std::vector<Matrix>& theta,
                       double penalty_weight, long& evaluations) {
    ++evaluations;
    const JointDist e = compose(s, theta);
    double value = objective_value(s.setting, e);
    if (s.setting != SettingId::SC_DEC_NOFB) {
        value -= penalty_weight * marginal_sq_gap(s, e);
    }
    return value;
}

std::vector<Matrix> ascend(const Structure& s, std::vector<Matrix> theta,
                           double penalty_weight, int max_iterations, long& evaluations) {
    const double h = 1e-6;
    double f = penalized_value(s, theta, penalty_weight, evaluations);
    double step = 0.25;
    int stall = 0;
    const int stall_limit = 4 * static_cast<int>(theta.size());

    for (int iter = 0; iter < max_iterations && stall < stall_limit; ++iter) {
        const std::size_t k = theta.size() > 1 ? static_cast<std::size_t>(iter) % theta.size() : 0;

        // pseudo-gradient over kernel k (bump-and-renormalize differences)
        Matrix grad(theta[k].size());
        for (std::size_t r = 0; r < theta[k].size(); ++r) {
            grad[r].assign(theta[k][r].size(), 0.0);
            for (std::size_t c = 0; c < theta[k][r].size(); ++c) {
                std::vector<Matrix> bumped = theta;
                bumped[k][r][c] += h;
                normalize_row(bumped[k][r]);
                grad[r][c] = (penalized_value(s, bumped, penalty_weight, evaluations) - f) / h;
            }
        }
        // per-row tangent direction
        double norm = 0.0;
        for (auto& row : grad) {
            const double mean =
                std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
            for (auto& g : row) {
                g -= mean;
                norm += g * g;
            }
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            ++stall;
            continue;
        }

        // backtracking line search with a per-iteration trial step; the base
        // step is floored so one flat kernel cannot freeze the others
        bool improved = false;
        double trial = step;
        for (int bt = 0; bt < 20 && !improved; ++bt) {
            std::vector<Matrix> cand = theta;
            for (std::size_t r = 0; r < cand[k].size(); ++r) {
                for (std::size_t c = 0; c < cand[k][r].size(); ++c) {
                    cand[k][r][c] += (trial / norm) * grad[r][c];
                }
                project_row(cand[k][r]);
            }
            const double fc = penalized_value(s, cand, penalty_weight, evaluations);
            if (fc > f + 1e-14) {
                theta = std::move(cand);
                f = fc;
                step = std::min(trial * 1.5, 1.0);
                improved = true;
            } else {
                trial *= 0.4;
            }
        }
        if (!improved) step = std::max(step * 0.7, 1e-4);
        stall = improved ? 0 : stall + 1;
    }
    return theta;
}

struct DeriveResult {
    bool ok = false;
    Matrix rows;  // derived kernel rows
};

// Solve M z = rhs for each output symbol, assemble kernel rows over the aux
// axis, and sanity-check bounds and row sums. `reach[w]` tells whether aux
// symbol w is reachable; unreachable rows are uniform-filled.
DeriveResult solve_output_kernel(const Eigen::MatrixXd& m,
                                 const std::vector<Eigen::VectorXd>& rhs_per_symbol,
                                 const std::vector<double>& reach, double residual_tol,
                                 double bound_slack) {
    DeriveResult result;
    const int K = static_cast<int>(m.cols());
    const int nv = static_cast<int>(rhs_per_symbol.size());
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);

    Matrix z(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(nv), 0.0));
    for (int v = 0; v < nv; ++v) {
        const Eigen::VectorXd sol = cod.solve(rhs_per_symbol[static_cast<std::size_t>(v)]);
        const double residual =
            (m * sol - rhs_per_symbol[static_cast<std::size_t>(v)]).cwiseAbs().maxCoeff();
        if (residual > residual_tol) return result;
        for (int w = 0; w < K; ++w) {
            double val = sol(w);
            if (reach[static_cast<std::size_t>(w)] < 1e-10) continue;  // filled later
            if (val < -bound_slack || val > 1.0 + bound_slack) return result;
            z[static_cast<std::size_t>(w)][static_cast<std::size_t>(v)] =
                std::clamp(val, 0.0, 1.0);
        }
    }
    for (int w = 0; w < K; ++w) {
        auto& row = z[static_cast<std::size_t>(w)];
        if (reach[static_cast<std::size_t>(w)] < 1e-10) {
            row.assign(row.size(), 1.0 / static_cast<double>(row.size()));
            continue;
        }
        double sum = 0.0;
        for (double val : row) sum += val;
        if (std::fabs(sum - 1.0) > std::max(1e-6, 4.0 * bound_slack)) return result;
        normalize_row(row);
    }
    result.ok = true;
    result.rows = std::move(z);
    return result;
}

// Target conditionals shared by the derivation paths.
struct DeriveContext {
    Kernel t_x_given_u;
    Kernel t_v_given_uxy;
    JointDist t_u;
    JointDist t_ux;

    explicit DeriveContext(const JointDist& target)
        : t_x_given_u(conditional_from(target, {"U", "X"}, {"U"})),
          t_v_given_uxy(conditional_from(target, {"U", "X", "Y", "V"}, {"U", "X", "Y"})),
          t_u(marginalize(target, Names{"U"})),
          t_ux(marginalize(target, Names{"U", "X"})) {}
};

// Given the input-side kernels in `theta`, solve the linear target-match
// equations for the output kernel and write it back into `theta`. Returns
// false when the system is inconsistent or leaves the simplex beyond
// `bound_slack`. SC_DEC_NOFB has no output kernel and always succeeds.
bool derive_output_rows(const DeriveContext& ctx, const Structure& s,
                        std::vector<Matrix>& theta, double residual_tol,
                        double bound_slack) {
    const int K = s.aux.size();
    const int nu = s.u.size(), nx = s.x.size(), ny = s.y.size(), nv = s.v.size();

    switch (s.setting) {
        case SettingId::CAUSAL_ENC_FB: {
            const auto& qw = theta[0][0];
            for (int u = 0; u < nu; ++u) {
                std::vector<int> live_x;
                for (int xx = 0; xx < nx; ++xx) {
                    if (ctx.t_x_given_u.row(static_cast<std::size_t>(u))
                            [static_cast<std::size_t>(xx)] > 1e-12) {
                        live_x.push_back(xx);
                    }
                }
                if (live_x.empty()) continue;
                Eigen::MatrixXd m(static_cast<int>(live_x.size()), K);
                std::vector<double> reach(static_cast<std::size_t>(K), 0.0);
                for (std::size_t i = 0; i < live_x.size(); ++i) {
                    const int xx = live_x[i];
                    const double px = ctx.t_x_given_u.row(static_cast<std::size_t>(u))
                                          [static_cast<std::size_t>(xx)];
                    for (int w = 0; w < K; ++w) {
                        const double val = qw[static_cast<std::size_t>(w)] *
                                           theta[1][static_cast<std::size_t>(u * K + w)]
                                                [static_cast<std::size_t>(xx)] /
                                           px;
                        m(static_cast<int>(i), w) = val;
                        reach[static_cast<std::size_t>(w)] += val;
                    }
                }
                for (int y = 0; y < ny; ++y) {
                    std::vector<Eigen::VectorXd> rhs(
                        static_cast<std::size_t>(nv),
                        Eigen::VectorXd(static_cast<int>(live_x.size())));
                    for (std::size_t i = 0; i < live_x.size(); ++i) {
                        const std::size_t row_idx =
                            static_cast<std::size_t>((u * nx + live_x[i]) * ny + y);
                        for (int vv = 0; vv < nv; ++vv) {
                            rhs[static_cast<std::size_t>(vv)](static_cast<int>(i)) =
                                ctx.t_v_given_uxy.row(row_idx)[static_cast<std::size_t>(vv)];
                        }
                    }
                    const DeriveResult derived =
                        solve_output_kernel(m, rhs, reach, residual_tol, bound_slack);
                    if (!derived.ok) return false;
                    for (int w = 0; w < K; ++w) {
                        theta[2][static_cast<std::size_t>((u * ny + y) * K + w)] =
                            derived.rows[static_cast<std::size_t>(w)];
                    }
                }
            }
            return true;
        }
        case SettingId::SC_ENC_NOFB: {
            for (int xx = 0; xx < nx; ++xx) {
                Eigen::MatrixXd m(nu, K);
                std::vector<double> reach(static_cast<std::size_t>(K), 0.0);
                for (int u = 0; u < nu; ++u) {
                    for (int w = 0; w < K; ++w) {
                        const double val = theta[0][static_cast<std::size_t>(u * nx + xx)]
                                                [static_cast<std::size_t>(w)];
                        m(u, w) = val;
                        reach[static_cast<std::size_t>(w)] +=
                            ctx.t_u.mass_at(static_cast<std::size_t>(u)) * val;
                    }
                }
                for (int y = 0; y < ny; ++y) {
                    std::vector<Eigen::VectorXd> rhs(static_cast<std::size_t>(nv),
                                                     Eigen::VectorXd(nu));
                    for (int u = 0; u < nu; ++u) {
                        const std::size_t row_idx =
                            static_cast<std::size_t>((u * nx + xx) * ny + y);
                        for (int vv = 0; vv < nv; ++vv) {
                            rhs[static_cast<std::size_t>(vv)](u) =
                                ctx.t_v_given_uxy.row(row_idx)[static_cast<std::size_t>(vv)];
                        }
                    }
                    const DeriveResult derived =
                        solve_output_kernel(m, rhs, reach, residual_tol, bound_slack);
                    if (!derived.ok) return false;
                    for (int w = 0; w < K; ++w) {
                        theta[1][static_cast<std::size_t>((y * nx + xx) * K + w)] =
                            derived.rows[static_cast<std::size_t>(w)];
                    }
                }
            }
            return true;
        }
        case SettingId::CAUSAL_DEC_FB: {
            std::vector<int> live;
            for (int u = 0; u < nu; ++u) {
                for (int xx = 0; xx < nx; ++xx) {
                    if (ctx.t_ux.mass_at(static_cast<std::size_t>(u * nx + xx)) > 1e-12) {
                        live.push_back(u * nx + xx);
                    }
                }
            }
            Eigen::MatrixXd m(static_cast<int>(live.size()), K);
            std::vector<double> reach(static_cast<std::size_t>(K), 0.0);
            for (std::size_t i = 0; i < live.size(); ++i) {
                for (int w = 0; w < K; ++w) {
                    const double val =
                        theta[0][static_cast<std::size_t>(live[i])][static_cast<std::size_t>(w)];
                    m(static_cast<int>(i), w) = val;
                    reach[static_cast<std::size_t>(w)] +=
                        ctx.t_ux.mass_at(static_cast<std::size_t>(live[i])) * val;
                }
            }
            for (int y = 0; y < ny; ++y) {
                std::vector<Eigen::VectorXd> rhs(
                    static_cast<std::size_t>(nv),
                    Eigen::VectorXd(static_cast<int>(live.size())));
                for (std::size_t i = 0; i < live.size(); ++i) {
                    const std::size_t row_idx = static_cast<std::size_t>(live[i] * ny + y);
                    for (int vv = 0; vv < nv; ++vv) {
                        rhs[static_cast<std::size_t>(vv)](static_cast<int>(i)) =
                            ctx.t_v_given_uxy.row(row_idx)[static_cast<std::size_t>(vv)];
                    }
                }
                const DeriveResult derived =
                    solve_output_kernel(m, rhs, reach, residual_tol, bound_slack);
                if (!derived.ok) return false;
                for (int w = 0; w < K; ++w) {
                    theta[1][static_cast<std::size_t>(y * K + w)] =
                        derived.rows[static_cast<std::size_t>(w)];
                }
            }
            return true;
        }
        default:
            return true;  // SC_DEC_NOFB: nothing to derive
    }
}

int default_cardinality(const JointDist& target) {
    const auto& vars = target.variables();
    return vars[0].size() * vars[1].size() * vars[2].size() * vars[3].size() + 2;
}

}  // namespace

AuxSolution maximize(SettingId setting, const CoordinationProblem& problem,
                     const OptimizerConfig& cfg) {
    if (cfg.restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    if (!(cfg.feasibility_tol > 0.0)) throw std::invalid_argument("feasibility_tol must be > 0");

    JointDist target = target_joint(problem);
    const int K = cfg.aux_cardinality > 0 ? cfg.aux_cardinality : default_cardinality(target);
    const Structure s = make_structure(setting, problem, K);

    long evaluations = 0;
    std::optional<Candidate> best;

    auto consider = [&](const JointDist& e) {
        Candidate c = realize(s, e);
        if (!best || candidate_better(c, *best, cfg.feasibility_tol)) best = std::move(c);
    };

    for (const auto& theta : witness_thetas(s)) {
        ++evaluations;
        consider(compose(s, theta));
    }

    const DeriveContext dctx(s.target);
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng(cfg.seed + static_cast<std::uint64_t>(r));
        std::vector<Matrix> theta = r == 0 ? uniform_theta(s) : random_theta(s, rng);
        {
            double best_gap = marginal_sq_gap(s, compose(s, theta));
            for (double slack : {1e-6, 0.05, 0.5}) {
                std::vector<Matrix> attempt = theta;
                if (!derive_output_rows(dctx, s, attempt, 1e-6, slack)) continue;
                const double gap = marginal_sq_gap(s, compose(s, attempt));
                if (gap < best_gap) {
                    theta = std::move(attempt);
                    best_gap = gap;
                    break;
                }
            }
        }
        // feasibility-first phase (the objective term is negligible under the
        // inflated penalty), then the standard penalized ascent
        theta = ascend(s, theta, 1e4 * cfg.penalty_weight, cfg.max_iterations, evaluations);
        theta = ascend(s, theta, cfg.penalty_weight, cfg.max_iterations, evaluations);
        const JointDist raw = compose(s, theta);
        consider(raw);
        try {
            consider(repair_to_admissible(setting, raw, target, 200, 1e-11));
        } catch (const NonConvergenceError&) {
            try {
                consider(repair_to_admissible(setting, raw, target, 200, cfg.feasibility_tol));
            } catch (const NonConvergenceError&) {
                // keep the unrepaired iterate
            }
        }
    }

    if (!best || best->residual > cfg.feasibility_tol) {
        throw InfeasibleSearchError(
            "no admissible candidate within feasibility tolerance " +
            std::to_string(cfg.feasibility_tol) + " after " + std::to_string(cfg.restarts) +
            " restarts (best residual " +
            (best ? std::to_string(best->residual) : std::string("n/a")) + ")");
    }
    return AuxSolution{std::move(best->extended), best->value, best->residual,
                       "multistart", evaluations, K, 0.0};
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

namespace {

// all length-`width` probability rows with entries that are multiples of 1/g
void simplex_grid_rows(int width, int g, Matrix& out) {
    std::vector<int> counts(static_cast<std::size_t>(width), 0);
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == width - 1) {
            counts[static_cast<std::size_t>(pos)] = remaining;
            std::vector<double> row(static_cast<std::size_t>(width));
            for (int i = 0; i < width; ++i) {
                row[static_cast<std::size_t>(i)] =
                    static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(g);
            }
            out.push_back(std::move(row));
            return;
        }
        for (int c = 0; c <= remaining; ++c) {
            counts[static_cast<std::size_t>(pos)] = c;
            rec(pos + 1, remaining - c);
        }
    };
    rec(0, g);
}


}  // namespace

AuxSolution brute_force_oracle(SettingId setting, const CoordinationProblem& problem,
                               int aux_cardinality, int grid) {
    if (grid < 2) throw std::invalid_argument("grid must be >= 2");
    if (aux_cardinality < 1) throw std::invalid_argument("aux cardinality must be >= 1");

    const Structure s = make_structure(setting, problem, aux_cardinality);
    const int K = aux_cardinality;
    const int nu = s.u.size(), nx = s.x.size(), ny = s.y.size(), nv = s.v.size();

    // enumerated scalar parameters, after target-consistency elimination
    long free_params = 0;
    switch (setting) {
        case SettingId::CAUSAL_ENC_FB:
            free_params = (K - 1) + static_cast<long>(nu) * (K - 1) * (nx - 1);
            break;
        case SettingId::SC_ENC_NOFB:
        case SettingId::CAUSAL_DEC_FB:
            free_params = static_cast<long>(nu) * nx * (K - 1);
            break;
        case SettingId::SC_DEC_NOFB:
            free_params = static_cast<long>(nu) * nx * nv * (K - 1);
            break;
        default:
            break;
    }
    if (free_params > 12) {
        throw SizeGuardError("oracle would enumerate " + std::to_string(free_params) +
                             " free parameters (guard: 12)");
    }

    const DeriveContext ctx(s.target);
    const Kernel& t_x_given_u = ctx.t_x_given_u;

    long evaluations = 0;
    std::optional<Candidate> best;
    const double feas_gate = 1e-6;

    auto consider = [&](const std::vector<Matrix>& theta) {
        ++evaluations;
        const JointDist e = compose(s, theta);
        if (marginal_tv_gap(s, e) > feas_gate) return;
        Candidate c{e, objective_value(setting, e), 0.0};
        if (!best || candidate_better(c, *best, feas_gate)) best = std::move(c);
    };

    Matrix grid_rows_k;  // rows of width K
    simplex_grid_rows(K, grid, grid_rows_k);

    if (setting == SettingId::CAUSAL_ENC_FB) {
        Matrix grid_rows_x;
        simplex_grid_rows(nx, grid, grid_rows_x);

        // odometer over: Q(w) and Q(x|u,w) for w < K-1
        const int n_free_x_rows = nu * (K - 1);
        std::vector<std::size_t> odo(static_cast<std::size_t>(n_free_x_rows), 0);
        for (const auto& qw : grid_rows_k) {
            std::fill(odo.begin(), odo.end(), 0);
            bool done = false;
            while (!done) {
                std::vector<Matrix> theta = uniform_theta(s);
                theta[0][0] = qw;
                bool feasible = true;
                for (int u = 0; u < nu && feasible; ++u) {
                    // free rows w < K-1, last row pinned by the input marginal
                    std::vector<double> residual_row(t_x_given_u.row(static_cast<std::size_t>(u)).begin(),
                                                     t_x_given_u.row(static_cast<std::size_t>(u)).end());
                    for (int w = 0; w < K - 1; ++w) {
                        const auto& row =
                            grid_rows_x[odo[static_cast<std::size_t>(u * (K - 1) + w)]];
                        theta[1][static_cast<std::size_t>(u * K + w)] = row;
                        for (int xx = 0; xx < nx; ++xx) {
                            residual_row[static_cast<std::size_t>(xx)] -=
                                qw[static_cast<std::size_t>(w)] * row[static_cast<std::size_t>(xx)];
                        }
                    }
                    auto& last = theta[1][static_cast<std::size_t>(u * K + (K - 1))];
                    const double q_last = qw[static_cast<std::size_t>(K - 1)];
                    if (q_last < 1e-12) {
                        for (double r : residual_row) {
                            if (std::fabs(r) > 1e-9) feasible = false;
                        }
                        last.assign(static_cast<std::size_t>(nx), 1.0 / nx);
                    } else {
                        for (int xx = 0; xx < nx; ++xx) {
                            const double val = residual_row[static_cast<std::size_t>(xx)] / q_last;
                            if (val < -kDeriveBoundSlack || val > 1.0 + kDeriveBoundSlack) {
                                feasible = false;
                                break;
                            }
                            last[static_cast<std::size_t>(xx)] = std::clamp(val, 0.0, 1.0);
                        }
                        if (feasible) normalize_row(last);
                    }
                }
                if (feasible && derive_output_rows(ctx, s, theta, kDeriveResidualTol,
                                                   kDeriveBoundSlack)) {
                    consider(theta);
                }
                // advance odometer
                done = true;
                for (std::size_t d = 0; d < odo.size(); ++d) {
                    if (++odo[d] < grid_rows_x.size()) {
                        done = false;
                        break;
                    }
                    odo[d] = 0;
                }
                if (odo.empty()) done = true;
            }
        }
    } else if (setting == SettingId::SC_ENC_NOFB || setting == SettingId::CAUSAL_DEC_FB) {
        // enumerate Q(aux|u,x) rows; derive the output kernel per linear solve
        const int n_rows = nu * nx;
        std::vector<std::size_t> odo(static_cast<std::size_t>(n_rows), 0);
        bool done = false;
        while (!done) {
            std::vector<Matrix> theta = uniform_theta(s);
            for (int i = 0; i < n_rows; ++i) {
                theta[0][static_cast<std::size_t>(i)] = grid_rows_k[odo[static_cast<std::size_t>(i)]];
            }
            if (derive_output_rows(ctx, s, theta, kDeriveResidualTol, kDeriveBoundSlack)) {
                consider(theta);
            }
            done = true;
            for (std::size_t d = 0; d < odo.size(); ++d) {
                if (++odo[d] < grid_rows_k.size()) {
                    done = false;
                    break;
                }
                odo[d] = 0;
            }
        }
    } else {
        // SC_DEC_NOFB: the auxiliary kernel is unconstrained
        const int n_rows = nu * nx * nv;
        std::vector<std::size_t> odo(static_cast<std::size_t>(n_rows), 0);
        bool done = false;
        while (!done) {
            std::vector<Matrix> theta = uniform_theta(s);
            for (int i = 0; i < n_rows; ++i) {
                theta[0][static_cast<std::size_t>(i)] = grid_rows_k[odo[static_cast<std::size_t>(i)]];
            }
            consider(theta);
            done = true;
            for (std::size_t d = 0; d < odo.size(); ++d) {
                if (++odo[d] < grid_rows_k.size()) {
                    done = false;
                    break;
                }
                odo[d] = 0;
            }
        }
    }

    if (!best) {
        throw InfeasibleSearchError("oracle found no feasible grid point at resolution 1/" +
                                    std::to_string(grid));
    }
    const double residual = check_admissible(setting, best->extended, s.target).worst_margin();
    return AuxSolution{std::move(best->extended), best->value, residual,
                       "oracle", evaluations, K, 1.0 / static_cast<double>(grid)};
}

// ---------------------------------------------------------------------------
// Repair
// ---------------------------------------------------------------------------

JointDist repair_to_admissible(SettingId setting, const JointDist& extended,
                               const JointDist& target, int sweep_budget, double tol) {
    // reconstruct a problem-free structure from the target itself
    const JointDist target_c = marginalize(target, base_variable_names());
    const std::string aux = std::string(auxiliary_name(setting));
    const int K = extended.variables()[static_cast<std::size_t>(
                                           extended.variable_index(aux))].size();

    CoordinationProblem pseudo{
        setting == SettingId::SC_DEC_NOFB ? SettingId::SC_DEC_NOFB : setting,
        Kernel::distribution(target_c.variables()[0], marginalize(target_c, Names{"U"}).mass()),
        conditional_from(target_c, {"X", "Y"}, {"X"}),
        Kernel::distribution(target_c.variables()[1], marginalize(target_c, Names{"X"}).mass()),
        conditional_from(target_c, {"U", "X", "Y", "V"}, {"U", "X", "Y"})};
    if (setting == SettingId::CAUSAL_ENC_FB || setting == SettingId::CAUSAL_DEC_FB) {
        pseudo.input_policy = conditional_from(target_c, {"U", "X"}, {"U"});
    } else if (setting == SettingId::SC_DEC_NOFB || setting == SettingId::SC_DEC_FB) {
        pseudo.input_policy = conditional_from(target_c, {"U", "X", "V"}, {"U"});
        pseudo.target_kernel.reset();
    }
    const Structure s = make_structure(setting, pseudo, K);

    const DeriveContext ctx(target_c);
    const Kernel& t_v_given_uxy = ctx.t_v_given_uxy;
    const Kernel& t_x_given_u = ctx.t_x_given_u;
    const JointDist& t_u = ctx.t_u;
    const JointDist& t_ux = ctx.t_ux;
    const int nu = s.u.size(), nx = s.x.size(), ny = s.y.size(), nv = s.v.size();
    (void)ny;

    JointDist e = marginalize(extended, s.canonical);
    double residual = 0.0;
    for (int sweep = 0; sweep < sweep_budget; ++sweep) {
        std::vector<Matrix> theta = extract_theta(s, e);
        e = compose(s, theta);
        residual = marginal_tv_gap(s, e);
        if (residual <= tol) return e;

        // exact fix of the input marginal (the correction is linear there)
        if (setting == SettingId::CAUSAL_ENC_FB) {
            const Kernel e_x_given_u = conditional_from(e, {"U", "X"}, {"U"});
            for (int u = 0; u < nu; ++u) {
                for (int w = 0; w < K; ++w) {
                    auto& row = theta[1][static_cast<std::size_t>(u * K + w)];
                    for (int xx = 0; xx < nx; ++xx) {
                        row[static_cast<std::size_t>(xx)] +=
                            t_x_given_u.row(static_cast<std::size_t>(u))[static_cast<std::size_t>(xx)] -
                            e_x_given_u.row(static_cast<std::size_t>(u))[static_cast<std::size_t>(xx)];
                        row[static_cast<std::size_t>(xx)] =
                            std::max(0.0, row[static_cast<std::size_t>(xx)]);
                    }
                    normalize_row(row);
                }
            }
        }

        // re-match the output kernel by solving the target equations. When
        // the exact solution leaves the simplex, retry with wider clamping
        // slack; any projected solution is kept only if it shrinks the gap.
        {
            bool rematched = false;
            for (double slack : {1e-6, 0.05, 0.5}) {
                std::vector<Matrix> attempt = theta;
                if (!derive_output_rows(ctx, s, attempt, 1e-6, slack)) continue;
                const JointDist candidate = compose(s, attempt);
                if (marginal_tv_gap(s, candidate) < residual - 1e-15) {
                    theta = std::move(attempt);
                    rematched = true;
                    break;
                }
            }
            if (rematched) {
                e = compose(s, theta);
                continue;
            }
        }

        const Kernel e_v_given_uxy = conditional_from(e, {"U", "X", "Y", "V"}, {"U", "X", "Y"});
        switch (setting) {
            case SettingId::CAUSAL_ENC_FB: {
                // averaged fix of the reconstruction kernel
                for (int u = 0; u < nu; ++u) {
                    for (int y = 0; y < ny; ++y) {
                        std::vector<double> c(static_cast<std::size_t>(nv), 0.0);
                        for (int xx = 0; xx < nx; ++xx) {
                            const double wx =
                                t_x_given_u.row(static_cast<std::size_t>(u))[static_cast<std::size_t>(xx)];
                            const std::size_t row_idx =
                                static_cast<std::size_t>((u * nx + xx) * ny + y);
                            for (int vv = 0; vv < nv; ++vv) {
                                c[static_cast<std::size_t>(vv)] +=
                                    wx * (t_v_given_uxy.row(row_idx)[static_cast<std::size_t>(vv)] -
                                          e_v_given_uxy.row(row_idx)[static_cast<std::size_t>(vv)]);
                            }
                        }
                        for (int w = 0; w < K; ++w) {
                            auto& row = theta[2][static_cast<std::size_t>((u * ny + y) * K + w)];
                            for (int vv = 0; vv < nv; ++vv) {
                                row[static_cast<std::size_t>(vv)] = std::max(
                                    0.0, row[static_cast<std::size_t>(vv)] + c[static_cast<std::size_t>(vv)]);
                            }
                            normalize_row(row);
                        }
                    }
                }
                break;
            }
            case SettingId::SC_ENC_NOFB: {
                for (int xx = 0; xx < nx; ++xx) {
                    for (int y = 0; y < ny; ++y) {
                        std::vector<double> c(static_cast<std::size_t>(nv), 0.0);
                        for (int u = 0; u < nu; ++u) {
                            const std::size_t row_idx =
                                static_cast<std::size_t>((u * nx + xx) * ny + y);
                            for (int vv = 0; vv < nv; ++vv) {
                                c[static_cast<std::size_t>(vv)] +=
                                    t_u.mass_at(static_cast<std::size_t>(u)) *
                                    (t_v_given_uxy.row(row_idx)[static_cast<std::size_t>(vv)] -
                                     e_v_given_uxy.row(row_idx)[static_cast<std::size_t>(vv)]);
                            }
                        }
                        for (int w = 0; w < K; ++w) {
                            auto& row = theta[1][static_cast<std::size_t>((y * nx + xx) * K + w)];
                            for (int vv = 0; vv < nv; ++vv) {
                                row[static_cast<std::size_t>(vv)] = std::max(
                                    0.0, row[static_cast<std::size_t>(vv)] + c[static_cast<std::size_t>(vv)]);
                            }
                            normalize_row(row);
                        }
                    }
                }
                break;
            }
            case SettingId::SC_DEC_NOFB:
                break;  // the refactorization alone is exact
            case SettingId::CAUSAL_DEC_FB: {
                for (int y = 0; y < ny; ++y) {
                    std::vector<double> c(static_cast<std::size_t>(nv), 0.0);
                    for (int u = 0; u < nu; ++u) {
                        for (int xx = 0; xx < nx; ++xx) {
                            const double w_ux = t_ux.mass_at(static_cast<std::size_t>(u * nx + xx));
                            const std::size_t row_idx =
                                static_cast<std::size_t>((u * nx + xx) * ny + y);
                            for (int vv = 0; vv < nv; ++vv) {
                                c[static_cast<std::size_t>(vv)] +=
                                    w_ux * (t_v_given_uxy.row(row_idx)[static_cast<std::size_t>(vv)] -
                                            e_v_given_uxy.row(row_idx)[static_cast<std::size_t>(vv)]);
                            }
                        }
                    }
                    for (int w = 0; w < K; ++w) {
                        auto& row = theta[1][static_cast<std::size_t>(y * K + w)];
                        for (int vv = 0; vv < nv; ++vv) {
                            row[static_cast<std::size_t>(vv)] = std::max(
                                0.0, row[static_cast<std::size_t>(vv)] + c[static_cast<std::size_t>(vv)]);
                        }
                        normalize_row(row);
                    }
                }
                break;
            }
            default:
                break;
        }
        e = compose(s, theta);
    }
    residual = marginal_tv_gap(s, e);
    if (residual <= tol) return e;
    throw NonConvergenceError("repair did not reach tolerance " + std::to_string(tol) +
                              " within " + std::to_string(sweep_budget) +
                              " sweeps (residual " + std::to_string(residual) + ")");
}

double feedback_gap_sc(const JointDist& target, const AuxSolution& best_nofb) {
    return constraint_sc_feedback(target) - best_nofb.value;
}

}  // namespace coord

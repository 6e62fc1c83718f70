// coordcli: batch driver for coordination-region computations.
//
// Subcommands: validate, evaluate, optimize, simulate,
//              example {curve, alpha-star, emit-problem}.
// Reports go to stdout as JSON (deterministic for a fixed seed); wall time is
// printed to stderr so repeated runs stay byte-identical on stdout.
//
// Exit codes: 0 success, 1 malformed input, 2 infeasible or violated
// precondition, 3 internal/optimizer failure.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "coordination/aux_opt.hpp"
#include "coordination/binary_example.hpp"
#include "coordination/coord_sim.hpp"
#include "coordination/errors.hpp"
#include "coordination/problem_io.hpp"
#include "json.hpp"

namespace {

using coord::CoordinationProblem;
using coord::SettingId;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitInternal = 3;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    ~Timer() {
        const auto elapsed = std::chrono::steady_clock::now() - start;
        std::cerr << "wall_time_ms="
                  << std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count()
                  << "\n";
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw coord::ProblemFormatError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void print_report(const std::string& command, const std::string& digest, std::uint64_t seed,
                  ordered_json results) {
    ordered_json report;
    report["command"] = command;
    report["input_digest"] = digest;
    report["seed"] = seed;
    report["results"] = std::move(results);
    std::cout << report.dump(2) << "\n";
}

ordered_json report_checks(const coord::ValidationReport& report) {
    ordered_json checks = ordered_json::array();
    for (const auto& c : report.checks) {
        checks.push_back(ordered_json{{"label", c.label},
                                      {"residual", c.residual},
                                      {"tolerance", c.tolerance},
                                      {"ok", c.ok}});
    }
    return ordered_json{{"passed", report.passed}, {"checks", std::move(checks)}};
}

std::string verdict_of(double value) {
    if (std::abs(value) <= 1e-12) return "undetermined";
    return value > 0.0 ? "achievable" : "not-achievable";
}

int cmd_validate(const std::string& path) {
    const std::string text = read_file(path);
    const CoordinationProblem problem = coord::parse_problem_text(text);
    const coord::JointDist joint = coord::target_joint(problem);
    const coord::ValidationReport report = coord::validate_decomposition(problem, joint);
    print_report("validate", coord::digest_bytes(text), coord::kDefaultSeed,
                 report_checks(report));
    return report.passed ? kExitOk : kExitInfeasible;
}

int cmd_evaluate(const std::string& path, double delta) {
    const std::string text = read_file(path);
    const CoordinationProblem problem = coord::parse_problem_text(text);
    const coord::JointDist joint = coord::target_joint(problem);
    const coord::ValidationReport validation = coord::validate_decomposition(problem, joint);
    if (!validation.passed) {
        print_report("evaluate", coord::digest_bytes(text), coord::kDefaultSeed,
                     report_checks(validation));
        return kExitInfeasible;
    }

    ordered_json results;
    results["setting"] = std::string(coord::to_string(problem.setting));
    double value = 0.0;
    switch (problem.setting) {
        case SettingId::SC_ENC_FB: {
            value = coord::constraint_sc_feedback(joint);
            const coord::RateWindow window =
                coord::rate_window(coord::embed_w_equals_x(joint), delta);
            results["constraint_bits"] = value;
            results["verdict"] = verdict_of(value);
            results["rate_window"] = ordered_json{{"delta", delta},
                                                  {"r_min", window.r_min},
                                                  {"r_max", window.r_max},
                                                  {"feasible", window.feasible}};
            break;
        }
        case SettingId::SC_DEC_FB: {
            value = coord::constraint_sd_feedback(joint);
            results["constraint_bits"] = value;
            results["verdict"] = verdict_of(value);
            break;
        }
        default:
            std::cerr << "error: setting " << coord::to_string(problem.setting)
                      << " has an auxiliary maximization; use `optimize`\n";
            return kExitInfeasible;
    }
    print_report("evaluate", coord::digest_bytes(text), coord::kDefaultSeed, std::move(results));
    return kExitOk;
}

int cmd_optimize(const std::string& path, int cardinality, int restarts, int iterations,
                 int grid_oracle, std::uint64_t seed) {
    const std::string text = read_file(path);
    const CoordinationProblem problem = coord::parse_problem_text(text);
    if (!coord::setting_has_auxiliary(problem.setting)) {
        std::cerr << "error: setting " << coord::to_string(problem.setting)
                  << " has no auxiliary variable\n";
        return kExitInfeasible;
    }

    coord::OptimizerConfig cfg;
    cfg.aux_cardinality = cardinality;
    cfg.restarts = restarts;
    cfg.max_iterations = iterations;
    cfg.seed = seed;
    const coord::AuxSolution sol = coord::maximize(problem.setting, problem, cfg);

    ordered_json results;
    results["setting"] = std::string(coord::to_string(problem.setting));
    results["value_bits"] = sol.value;
    results["feasibility_residual"] = sol.feasibility_residual;
    results["method"] = sol.method;
    results["aux_cardinality"] = sol.aux_cardinality;
    results["evaluations"] = sol.evaluations;
    if (grid_oracle > 0) {
        const coord::AuxSolution oracle =
            coord::brute_force_oracle(problem.setting, problem, sol.aux_cardinality, grid_oracle);
        results["oracle"] = ordered_json{{"value_bits", oracle.value},
                                         {"grid_spacing", oracle.grid_spacing},
                                         {"evaluations", oracle.evaluations},
                                         {"difference", sol.value - oracle.value}};
    }
    print_report("optimize", coord::digest_bytes(text), seed, std::move(results));
    return kExitOk;
}

int cmd_simulate(const std::string& path, coord::SimConfig cfg, int cardinality,
                 const std::string& trace_out) {
    const std::string text = read_file(path);
    const CoordinationProblem problem = coord::parse_problem_text(text);

    coord::JointDist extended = [&]() -> coord::JointDist {
        if (cfg.scheme == coord::SimScheme::W_EQUALS_X) {
            if (problem.setting != SettingId::SC_ENC_FB) {
                throw coord::AdmissibilityError(
                    "the W-equals-X scheme simulates strictly causal encoding with feedback "
                    "(SC_ENC_FB) targets");
            }
            return coord::embed_w_equals_x(coord::target_joint(problem));
        }
        if (problem.setting != SettingId::CAUSAL_ENC_FB) {
            throw coord::AdmissibilityError(
                "the generic scheme simulates causal encoding with feedback (CAUSAL_ENC_FB) "
                "targets; decoder-side settings have no simulator");
        }
        coord::OptimizerConfig ocfg;
        ocfg.aux_cardinality = cardinality;
        ocfg.seed = cfg.seed;
        return coord::maximize(problem.setting, problem, ocfg).extended;
    }();

    const coord::SimReport report = coord::estimate_error_probability(problem, extended, cfg);
    const coord::Codebooks books = coord::build_codebooks(extended, cfg);

    if (!trace_out.empty()) {
        const auto [trace, single] = coord::run_session(problem, extended, cfg);
        (void)single;
        std::ofstream out(trace_out);
        if (!out) throw std::runtime_error("cannot write '" + trace_out + "'");
        coord::write_trace(out, trace, coord::target_joint(problem).variables());
    }

    ordered_json results;
    results["setting"] = std::string(coord::to_string(problem.setting));
    results["scheme"] = cfg.scheme == coord::SimScheme::W_EQUALS_X ? "w-equals-x" : "generic-w";
    results["n"] = cfg.n;
    results["blocks"] = cfg.block_count;
    results["trials"] = report.trials;
    results["rate"] = books.rate();
    results["message_count"] = books.message_count();
    results["typ_tol"] = cfg.resolved_typ_tol();
    results["coord_tol"] = cfg.coord_tol;
    results["tv_all"] = report.tv_all;
    results["tv_core"] = report.tv_core;
    results["p_error"] = ordered_json{{"estimate", report.p_error_estimate},
                                      {"ci95_low", report.p_error_low},
                                      {"ci95_high", report.p_error_high}};
    results["failures"] = ordered_json{{"encoder", report.encoder_failures},
                                       {"decoder", report.decoder_failures},
                                       {"decode_ambiguities", report.decode_ambiguities}};
    print_report("simulate", coord::digest_bytes(text), cfg.seed, std::move(results));
    return kExitOk;
}

int cmd_example_curve(double epsilon, int grid, const std::string& out,
                      const std::string& sweep_out) {
    const coord::CurveTable table = coord::emit_curves(epsilon, grid);
    ordered_json results;
    results["epsilon"] = epsilon;
    results["grid"] = grid;
    if (!out.empty()) {
        std::ofstream os(out);
        if (!os) throw std::runtime_error("cannot write '" + out + "'");
        coord::write_constraint_csv(os, table);
        results["constraint_table"] = out;
    }
    if (!sweep_out.empty()) {
        std::ofstream os(sweep_out);
        if (!os) throw std::runtime_error("cannot write '" + sweep_out + "'");
        coord::write_alpha_star_csv(os, table);
        results["alpha_star_table"] = sweep_out;
    }
    if (out.empty() && sweep_out.empty()) {
        coord::write_constraint_csv(std::cout, table);
        std::cout << "\n";
        coord::write_alpha_star_csv(std::cout, table);
        return kExitOk;
    }
    print_report("example curve", "none", coord::kDefaultSeed, std::move(results));
    return kExitOk;
}

int cmd_example_alpha_star(double epsilon) {
    ordered_json results;
    results["epsilon"] = epsilon;
    results["alpha_star"] = coord::alpha_star(epsilon);
    print_report("example alpha-star", "none", coord::kDefaultSeed, std::move(results));
    return kExitOk;
}

int cmd_example_emit_problem(double alpha, double epsilon, const std::string& out) {
    const CoordinationProblem problem = coord::make_target({alpha, epsilon});
    const std::string text = coord::problem_to_json(problem);
    if (out.empty()) {
        std::cout << text;
        return kExitOk;
    }
    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + out + "'");
    os << text;
    ordered_json results;
    results["alpha"] = alpha;
    results["epsilon"] = epsilon;
    results["path"] = out;
    print_report("example emit-problem", coord::digest_bytes(text), coord::kDefaultSeed,
                 std::move(results));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"achievable joint-distribution regions for coordination over a noisy "
                 "channel with feedback"};
    app.require_subcommand(1);

    std::string file, out, sweep_out, trace_out, scheme = "w-equals-x";
    double delta = 0.01, epsilon = 0.1, alpha = 0.0, rate = -1.0;
    double coord_tol = 0.2, typ_tol = 0.0;
    int cardinality = 0, restarts = 8, iterations = 400, grid_oracle = 0, grid = 100;
    int n = 100, blocks = 10, trials = 20;
    std::uint64_t seed = coord::kDefaultSeed;

    auto* validate = app.add_subcommand("validate", "check a problem file's decomposition");
    validate->add_option("file", file)->required();

    auto* evaluate = app.add_subcommand("evaluate", "evaluate an auxiliary-free constraint");
    evaluate->add_option("file", file)->required();
    evaluate->add_option("--delta", delta, "rate margin for the reported window");

    auto* optimize = app.add_subcommand("optimize", "maximize an auxiliary-variable objective");
    optimize->add_option("file", file)->required();
    optimize->add_option("--cardinality", cardinality, "auxiliary alphabet size (0: default bound)");
    optimize->add_option("--restarts", restarts);
    optimize->add_option("--iterations", iterations);
    optimize->add_option("--grid-oracle", grid_oracle, "also run the grid oracle at this resolution");
    optimize->add_option("--seed", seed);

    auto* simulate = app.add_subcommand("simulate", "run the block-Markov scheme");
    simulate->add_option("file", file)->required();
    simulate->add_option("--n", n, "block length");
    simulate->add_option("--blocks", blocks, "number of blocks");
    simulate->add_option("--trials", trials);
    simulate->add_option("--seed", seed);
    simulate->add_option("--delta", delta, "rate margin");
    simulate->add_option("--rate", rate, "rate override in bits (default: window midpoint)");
    simulate->add_option("--scheme", scheme)->check(CLI::IsMember({"w-equals-x", "generic-w"}));
    simulate->add_option("--coord-tol", coord_tol, "coordination tolerance");
    simulate->add_option("--typ-tol", typ_tol, "typicality tolerance (0: coord_tol/2)");
    simulate->add_option("--cardinality", cardinality, "auxiliary size for generic-w");
    simulate->add_option("--trace-out", trace_out, "write one session trace as columnar text");

    auto* example = app.add_subcommand("example", "binary worked example");
    example->require_subcommand(1);
    auto* curve = example->add_subcommand("curve", "constraint comparison and alpha-star sweep");
    curve->add_option("--epsilon", epsilon)->required();
    curve->add_option("--grid", grid);
    curve->add_option("--out", out, "constraint table path (stdout when omitted)");
    curve->add_option("--sweep-out", sweep_out, "alpha-star sweep path");
    auto* astar = example->add_subcommand("alpha-star", "smallest coordinable alpha");
    astar->add_option("--epsilon", epsilon)->required();
    auto* emit = example->add_subcommand("emit-problem", "write a problem file");
    emit->add_option("--alpha", alpha)->required();
    emit->add_option("--epsilon", epsilon)->required();
    emit->add_option("--out", out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitBadInput;
    }

    Timer timer;
    try {
        if (*validate) return cmd_validate(file);
        if (*evaluate) return cmd_evaluate(file, delta);
        if (*optimize)
            return cmd_optimize(file, cardinality, restarts, iterations, grid_oracle, seed);
        if (*simulate) {
            coord::SimConfig cfg;
            cfg.n = n;
            cfg.block_count = blocks;
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.delta = delta;
            if (rate >= 0.0) cfg.rate_override = rate;
            cfg.coord_tol = coord_tol;
            cfg.typ_tol = typ_tol;
            cfg.scheme = scheme == "generic-w" ? coord::SimScheme::GENERIC_W
                                               : coord::SimScheme::W_EQUALS_X;
            return cmd_simulate(file, cfg, cardinality, trace_out);
        }
        if (*curve) return cmd_example_curve(epsilon, grid, out, sweep_out);
        if (*astar) return cmd_example_alpha_star(epsilon);
        if (*emit) return cmd_example_emit_problem(alpha, epsilon, out);
    } catch (const coord::ProblemFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const coord::RateWindowEmptyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const coord::SizeGuardError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const coord::AdmissibilityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const coord::InfeasibleSearchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}

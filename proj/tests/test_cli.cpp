// End-to-end checks of the command-line surface: exit-code contract, file
// round-trips, and report fields. The binary path comes from the build.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "coordination/binary_example.hpp"
#include "coordination/info.hpp"
#include "coordination/problem_io.hpp"
#include "doctest.h"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args, bool merge_stderr = false) {
    const std::string cmd = std::string(COORDCLI_PATH) + " " + args +
                            (merge_stderr ? " 2>&1" : " 2>/dev/null");
    CliResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buffer[4096];
    while (std::size_t got = fread(buffer, 1, sizeof(buffer), pipe)) {
        result.out.append(buffer, got);
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

fs::path tmp_dir() {
    const fs::path dir = fs::temp_directory_path() / "coordination-cli-tests";
    fs::create_directories(dir);
    return dir;
}

std::string write_file(const std::string& name, const std::string& contents) {
    const fs::path path = tmp_dir() / name;
    std::ofstream out(path);
    out << contents;
    return path.string();
}

std::string emit_problem(double alpha, double epsilon, const std::string& name) {
    const fs::path path = tmp_dir() / name;
    const CliResult r = run_cli("example emit-problem --alpha " + std::to_string(alpha) +
                                " --epsilon " + std::to_string(epsilon) + " --out " +
                                path.string());
    REQUIRE(r.exit_code == 0);
    return path.string();
}

}  // namespace

TEST_CASE("round trip: emitted problems validate and evaluate to the closed form") {
    for (auto [alpha, eps] : {std::pair{0.45, 0.1}, {0.0, 0.0}, {0.875, 0.3}}) {
        const std::string path =
            emit_problem(alpha, eps, "roundtrip_" + std::to_string(alpha) + ".json");
        const CliResult v = run_cli("validate " + path);
        CHECK(v.exit_code == 0);
        CHECK(json::parse(v.out)["results"]["passed"].get<bool>());

        const CliResult e = run_cli("evaluate " + path);
        CHECK(e.exit_code == 0);
        const double value = json::parse(e.out)["results"]["constraint_bits"].get<double>();
        CHECK(value ==
              doctest::Approx(coord::constraint_closed_form({alpha, eps})).epsilon(1e-9));
    }
}

TEST_CASE("evaluate: verdicts across the sign range") {
    const std::string achievable = emit_problem(0.45, 0.1, "achievable.json");
    const CliResult a = run_cli("evaluate " + achievable);
    CHECK(a.exit_code == 0);
    CHECK(json::parse(a.out)["results"]["verdict"] == "achievable");
    CHECK(json::parse(a.out)["results"]["rate_window"]["feasible"].get<bool>());

    const std::string blocked = emit_problem(0.1, 0.1, "blocked.json");
    const CliResult b = run_cli("evaluate " + blocked);
    CHECK(b.exit_code == 0);
    CHECK(json::parse(b.out)["results"]["verdict"] == "not-achievable");

    // alpha = 7/8 at eps = 0.5: the constraint is exactly zero
    const std::string boundary = emit_problem(0.875, 0.5, "boundary.json");
    const CliResult c = run_cli("evaluate " + boundary);
    CHECK(c.exit_code == 0);
    CHECK(json::parse(c.out)["results"]["verdict"] == "undetermined");
}

TEST_CASE("exit-code contract") {
    // 1: malformed JSON
    const std::string garbage = write_file("garbage.json", "{not json");
    CHECK(run_cli("validate " + garbage).exit_code == 1);

    // 1: non-stochastic channel row, named field in the diagnostic
    const std::string bad_channel = write_file("bad_channel.json", R"({
      "setting": "SC_ENC_FB",
      "alphabets": {"U": ["0","1"], "X": ["0","1"], "Y": ["0","1"], "V": ["0","1"]},
      "source": [0.5, 0.5],
      "channel": [[0.9, 0.2], [0.1, 0.9]],
      "input_policy": {"shape": "x", "table": [[0.5, 0.5]]},
      "target_kernel": [[[[1,0],[1,0]],[[1,0],[1,0]]],[[[0,1],[0,1]],[[0,1],[0,1]]]]
    })");
    const CliResult bad = run_cli("validate " + bad_channel, true);
    CHECK(bad.exit_code == 1);
    CHECK(bad.out.find("channel[0]") != std::string::npos);

    // 2: decomposition violation (input correlated with the source)
    const std::string correlated = write_file("correlated.json", R"({
      "setting": "SC_ENC_FB",
      "alphabets": {"U": ["0","1"], "X": ["0","1"], "Y": ["0","1"], "V": ["0","1"]},
      "source": [0.5, 0.5],
      "channel": [[0.9, 0.1], [0.1, 0.9]],
      "input_policy": {"shape": "x_given_u", "table": [[1.0, 0.0], [0.0, 1.0]]},
      "target_kernel": [[[[1,0],[1,0]],[[1,0],[1,0]]],[[[0,1],[0,1]],[[0,1],[0,1]]]]
    })");
    const CliResult corr = run_cli("validate " + correlated);
    CHECK(corr.exit_code == 2);
    const json report = json::parse(corr.out);
    bool found = false;
    for (const auto& check : report["results"]["checks"]) {
        if (check["label"] == "u-independent-of-x" && !check["ok"].get<bool>()) found = true;
    }
    CHECK(found);

    // 2: optimizer on an auxiliary-free setting
    const std::string plain = emit_problem(0.4, 0.1, "plain.json");
    CHECK(run_cli("optimize " + plain).exit_code == 2);

    // 2: simulate with an empty rate window
    const std::string blocked = emit_problem(0.1, 0.1, "blocked2.json");
    CHECK(run_cli("simulate " + blocked + " --n 30 --blocks 4 --trials 2").exit_code == 2);

    // 3: optimizer infeasibility (one-point auxiliary cannot reproduce an
    // input-dependent reconstruction kernel)
    coord::CoordinationProblem causal = coord::make_target({0.4, 0.1});
    causal.setting = coord::SettingId::CAUSAL_ENC_FB;
    const coord::Alphabet u = coord::numeric_alphabet("U", 2);
    const coord::Alphabet x = coord::numeric_alphabet("X", 2);
    causal.input_policy = coord::Kernel({u}, {x}, {{0.5, 0.5}, {0.5, 0.5}});
    const fs::path causal_path = tmp_dir() / "causal.json";
    coord::save_problem(causal_path.string(), causal);
    CHECK(run_cli("optimize " + causal_path.string() +
                  " --cardinality 1 --restarts 2 --iterations 40")
              .exit_code == 3);
}

TEST_CASE("optimize: oracle comparison stays within tolerance") {
    // V tracks Y deterministically; the maximum is I(X;Y), on the oracle grid
    coord::CoordinationProblem causal{
        coord::SettingId::CAUSAL_ENC_FB,
        coord::Kernel::distribution(coord::numeric_alphabet("U", 2), {0.5, 0.5}),
        coord::Kernel({coord::numeric_alphabet("X", 2)}, {coord::numeric_alphabet("Y", 2)},
                      {{0.75, 0.25}, {0.25, 0.75}}),
        coord::Kernel({coord::numeric_alphabet("U", 2)}, {coord::numeric_alphabet("X", 2)},
                      {{0.5, 0.5}, {0.5, 0.5}}),
        std::nullopt};
    std::vector<std::vector<double>> v_rows;
    for (int uu = 0; uu < 2; ++uu) {
        for (int xx = 0; xx < 2; ++xx) {
            for (int yy = 0; yy < 2; ++yy) {
                std::vector<double> row(2, 0.0);
                row[static_cast<std::size_t>(yy)] = 1.0;
                v_rows.push_back(std::move(row));
            }
        }
    }
    causal.target_kernel =
        coord::Kernel({coord::numeric_alphabet("U", 2), coord::numeric_alphabet("X", 2),
                       coord::numeric_alphabet("Y", 2)},
                      {coord::numeric_alphabet("V", 2)}, v_rows);
    const fs::path path = tmp_dir() / "causal_vy.json";
    coord::save_problem(path.string(), causal);

    const CliResult r = run_cli("optimize " + path.string() +
                                " --cardinality 2 --restarts 3 --iterations 120 "
                                "--grid-oracle 16 --seed 3");
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    CHECK(std::fabs(report["results"]["oracle"]["difference"].get<double>()) <= 1e-3);
    CHECK(report["results"]["feasibility_residual"].get<double>() <= 1e-6);
}

TEST_CASE("simulate: report fields and trace export") {
    const std::string path = emit_problem(0.45, 0.1, "sim.json");
    const fs::path trace = tmp_dir() / "trace.txt";
    const CliResult r = run_cli("simulate " + path +
                                " --n 40 --blocks 5 --trials 3 --seed 5 --rate 0.2 "
                                "--typ-tol 0.3 --coord-tol 0.3 --trace-out " +
                                trace.string());
    REQUIRE(r.exit_code == 0);
    const json report = json::parse(r.out);
    CHECK(report["results"]["message_count"].get<int>() == 256);
    CHECK(report["results"]["tv_all"].get<double>() >= 0.0);
    CHECK(report["results"]["tv_all"].get<double>() <= 1.0);
    CHECK(report["results"]["p_error"]["estimate"].get<double>() >= 0.0);

    std::ifstream in(trace);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "pos block u x y v m m_hat");
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 200);  // n * B positions
}

TEST_CASE("example curve: bracketing rows around the root") {
    const CliResult r = run_cli("example curve --epsilon 0.1 --grid 100");
    REQUIRE(r.exit_code == 0);
    std::istringstream is(r.out);
    std::string line;
    std::getline(is, line);
    CHECK(line == "alpha,coord_constraint,lossy_constraint");
    double prev_alpha = 0.0, prev_value = 0.0;
    bool first = true, bracketed = false;
    int rows = 0;
    while (std::getline(is, line) && !line.empty()) {
        ++rows;
        std::istringstream row(line);
        std::string a, c, l;
        std::getline(row, a, ',');
        std::getline(row, c, ',');
        std::getline(row, l, ',');
        const double alpha = std::stod(a), value = std::stod(c);
        if (!first && prev_value < 0.0 && value >= 0.0) {
            CHECK(prev_alpha <= 0.281);
            CHECK(alpha >= 0.27);
            bracketed = true;
        }
        prev_alpha = alpha;
        prev_value = value;
        first = false;
    }
    CHECK(rows == 100);
    CHECK(bracketed);
}

TEST_CASE("decoder-side settings: validate, evaluate, and optimize end to end") {
    const std::string sd_fb = write_file("sd_fb.json", R"({
      "setting": "SC_DEC_FB",
      "alphabets": {"U": ["0","1"], "X": ["0","1"], "Y": ["0","1"], "V": ["0","1"]},
      "source": [0.5, 0.5],
      "channel": [[0.85, 0.15], [0.15, 0.85]],
      "input_policy": {"shape": "xv_given_u",
                       "table": [[0.35, 0.15, 0.35, 0.15], [0.15, 0.35, 0.15, 0.35]]}
    })");
    const CliResult v = run_cli("validate " + sd_fb);
    CHECK(v.exit_code == 0);
    const CliResult e = run_cli("evaluate " + sd_fb);
    CHECK(e.exit_code == 0);
    CHECK(json::parse(e.out)["results"]["verdict"] == "achievable");

    // same statistics under the no-source-feedback reading: the auxiliary
    // maximization must stay consistent with its own grid oracle
    const std::string sd_nofb = write_file("sd_nofb.json", R"({
      "setting": "SC_DEC_NOFB",
      "alphabets": {"U": ["0","1"], "X": ["0","1"], "Y": ["0","1"], "V": ["0","1"]},
      "source": [0.5, 0.5],
      "channel": [[0.85, 0.15], [0.15, 0.85]],
      "input_policy": {"shape": "xv_given_u",
                       "table": [[0.35, 0.15, 0.35, 0.15], [0.15, 0.35, 0.15, 0.35]]}
    })");
    const CliResult o = run_cli("optimize " + sd_nofb +
                                " --cardinality 2 --restarts 2 --iterations 80 "
                                "--grid-oracle 6 --seed 3");
    REQUIRE(o.exit_code == 0);
    const json report = json::parse(o.out);
    CHECK(report["results"]["feasibility_residual"].get<double>() <= 1e-6);
    CHECK(std::fabs(report["results"]["oracle"]["difference"].get<double>()) <= 1e-3);

    const std::string df = write_file("df.json", R"({
      "setting": "CAUSAL_DEC_FB",
      "alphabets": {"U": ["0","1"], "X": ["0","1"], "Y": ["0","1"], "V": ["0","1"]},
      "source": [0.5, 0.5],
      "channel": [[0.75, 0.25], [0.25, 0.75]],
      "input_policy": {"shape": "x_given_u", "table": [[0.625, 0.375], [0.375, 0.625]]},
      "target_kernel": [[[[0.875,0.125],[0.125,0.875]],[[0.875,0.125],[0.125,0.875]]],
                        [[[0.875,0.125],[0.125,0.875]],[[0.875,0.125],[0.125,0.875]]]]
    })");
    const CliResult w3 = run_cli("optimize " + df +
                                 " --cardinality 2 --restarts 3 --iterations 100 "
                                 "--grid-oracle 8 --seed 5");
    REQUIRE(w3.exit_code == 0);
    const json w3_report = json::parse(w3.out);
    CHECK(w3_report["results"]["feasibility_residual"].get<double>() <= 1e-6);
    CHECK(std::fabs(w3_report["results"]["oracle"]["difference"].get<double>()) <= 1e-3);
}

TEST_CASE("optimize: one-point auxiliary prints the constant-aux value") {
    // reconstruction kernel free of x, so the one-point family contains it
    const coord::Alphabet u = coord::numeric_alphabet("U", 2);
    const coord::Alphabet x = coord::numeric_alphabet("X", 2);
    const coord::Alphabet y = coord::numeric_alphabet("Y", 2);
    const coord::Alphabet v = coord::numeric_alphabet("V", 2);
    std::vector<std::vector<double>> v_rows;
    for (int uu = 0; uu < 2; ++uu) {
        for (int xx = 0; xx < 2; ++xx) {
            for (int yy = 0; yy < 2; ++yy) {
                const double p = (uu == yy) ? 0.8 : 0.3;
                v_rows.push_back({p, 1.0 - p});
            }
        }
    }
    const coord::CoordinationProblem p{
        coord::SettingId::CAUSAL_ENC_FB, coord::Kernel::distribution(u, {0.5, 0.5}),
        coord::Kernel({x}, {y}, {{0.8, 0.2}, {0.2, 0.8}}),
        coord::Kernel({u}, {x}, {{0.6, 0.4}, {0.6, 0.4}}),
        coord::Kernel({u, x, y}, {v}, v_rows)};
    const fs::path path = tmp_dir() / "xfree_causal.json";
    coord::save_problem(path.string(), p);

    const CliResult r = run_cli("optimize " + path.string() +
                                " --cardinality 1 --restarts 2 --iterations 60 --seed 2");
    REQUIRE(r.exit_code == 0);
    const coord::JointDist target = coord::target_joint(p);
    const std::vector<std::string> su{"U"}, sv{"V"}, sy{"Y"};
    const double expect = -coord::mutual_information(target, su, sv, sy);
    CHECK(json::parse(r.out)["results"]["value_bits"].get<double>() ==
          doctest::Approx(expect).epsilon(1e-6));
    CHECK(json::parse(r.out)["results"]["aux_cardinality"].get<int>() == 1);
}

#include "coordination/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace coord {

namespace {

using nlohmann::ordered_json;

constexpr double kFileRowTol = 1e-9;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ProblemFormatError(path + ": " + what);
}

std::vector<double> stochastic_row(const ordered_json& row, std::size_t width,
                                   const std::string& path) {
    if (!row.is_array() || row.size() != width) {
        fail(path, "expected a probability row of length " + std::to_string(width));
    }
    std::vector<double> out;
    out.reserve(width);
    double sum = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
        if (!row[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
        const double v = row[i].get<double>();
        if (v < -1e-15 || !std::isfinite(v)) {
            fail(path + "[" + std::to_string(i) + "]", "negative or non-finite probability");
        }
        out.push_back(std::max(0.0, v));
        sum += out.back();
    }
    if (std::fabs(sum - 1.0) > kFileRowTol) {
        fail(path, "row sums to " + std::to_string(sum) + ", expected 1 within 1e-9");
    }
    for (auto& v : out) v /= sum;
    return out;
}

Alphabet parse_alphabet(const ordered_json& doc, const std::string& name) {
    if (!doc.contains("alphabets") || !doc["alphabets"].contains(name)) {
        fail("alphabets." + name, "missing alphabet");
    }
    const auto& arr = doc["alphabets"][name];
    if (!arr.is_array() || arr.empty()) fail("alphabets." + name, "expected a non-empty array");
    std::vector<std::string> symbols;
    for (const auto& s : arr) {
        if (!s.is_string()) fail("alphabets." + name, "symbols must be strings");
        symbols.push_back(s.get<std::string>());
    }
    try {
        return Alphabet(name, std::move(symbols));
    } catch (const std::invalid_argument& e) {
        fail("alphabets." + name, e.what());
    }
}

}  // namespace

CoordinationProblem parse_problem_text(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProblemFormatError(std::string("invalid JSON: ") + e.what());
    }

    if (!doc.contains("setting") || !doc["setting"].is_string()) {
        fail("setting", "missing setting label");
    }
    SettingId setting;
    try {
        setting = setting_from_string(doc["setting"].get<std::string>());
    } catch (const std::invalid_argument& e) {
        fail("setting", e.what());
    }

    const Alphabet u = parse_alphabet(doc, "U");
    const Alphabet x = parse_alphabet(doc, "X");
    const Alphabet y = parse_alphabet(doc, "Y");
    const Alphabet v = parse_alphabet(doc, "V");
    const auto nu = static_cast<std::size_t>(u.size());
    const auto nx = static_cast<std::size_t>(x.size());
    const auto ny = static_cast<std::size_t>(y.size());
    const auto nv = static_cast<std::size_t>(v.size());

    if (!doc.contains("source")) fail("source", "missing");
    Kernel source = Kernel::distribution(u, stochastic_row(doc["source"], nu, "source"));

    if (!doc.contains("channel") || !doc["channel"].is_array() || doc["channel"].size() != nx) {
        fail("channel", "expected " + std::to_string(nx) + " rows");
    }
    std::vector<std::vector<double>> channel_rows;
    for (std::size_t r = 0; r < nx; ++r) {
        channel_rows.push_back(
            stochastic_row(doc["channel"][r], ny, "channel[" + std::to_string(r) + "]"));
    }
    Kernel channel({x}, {y}, std::move(channel_rows));

    if (!doc.contains("input_policy") || !doc["input_policy"].is_object()) {
        fail("input_policy", "expected an object with 'shape' and 'table'");
    }
    const auto& ip = doc["input_policy"];
    if (!ip.contains("shape") || !ip["shape"].is_string()) fail("input_policy.shape", "missing");
    if (!ip.contains("table") || !ip["table"].is_array()) fail("input_policy.table", "missing");
    const std::string shape = ip["shape"].get<std::string>();

    const bool strictly_causal_input =
        setting == SettingId::SC_ENC_FB || setting == SettingId::SC_ENC_NOFB;
    const bool causal_input =
        setting == SettingId::CAUSAL_ENC_FB || setting == SettingId::CAUSAL_DEC_FB;

    std::optional<Kernel> input_policy;
    if (shape == "x") {
        if (!strictly_causal_input) {
            fail("input_policy.shape", "shape 'x' is only valid for the strictly causal "
                                       "encoding settings");
        }
        if (ip["table"].size() != 1) fail("input_policy.table", "expected exactly 1 row");
        input_policy =
            Kernel::distribution(x, stochastic_row(ip["table"][0], nx, "input_policy.table[0]"));
    } else if (shape == "x_given_u") {
        // accepted for the strictly causal encoding settings too, so that the
        // decomposition validator (not the parser) reports input correlation
        if (!causal_input && !strictly_causal_input) {
            fail("input_policy.shape", "shape 'x_given_u' is only valid for the encoding "
                                       "settings and causal decoding with feedback");
        }
        if (ip["table"].size() != nu) {
            fail("input_policy.table", "expected " + std::to_string(nu) + " rows");
        }
        std::vector<std::vector<double>> rows;
        for (std::size_t r = 0; r < nu; ++r) {
            rows.push_back(stochastic_row(ip["table"][r], nx,
                                          "input_policy.table[" + std::to_string(r) + "]"));
        }
        input_policy = Kernel({u}, {x}, std::move(rows));
    } else if (shape == "xv_given_u") {
        if (setting != SettingId::SC_DEC_NOFB && setting != SettingId::SC_DEC_FB) {
            fail("input_policy.shape", "shape 'xv_given_u' is only valid for the strictly "
                                       "causal decoding settings");
        }
        if (ip["table"].size() != nu) {
            fail("input_policy.table", "expected " + std::to_string(nu) + " rows");
        }
        std::vector<std::vector<double>> rows;
        for (std::size_t r = 0; r < nu; ++r) {
            rows.push_back(stochastic_row(ip["table"][r], nx * nv,
                                          "input_policy.table[" + std::to_string(r) + "]"));
        }
        input_policy = Kernel({u}, {x, v}, std::move(rows));
    } else {
        fail("input_policy.shape", "unknown shape '" + shape + "'");
    }

    std::optional<Kernel> target_kernel;
    const bool needs_target = setting != SettingId::SC_DEC_NOFB && setting != SettingId::SC_DEC_FB;
    if (needs_target) {
        if (!doc.contains("target_kernel")) fail("target_kernel", "missing");
        const auto& tk = doc["target_kernel"];
        if (!tk.is_array() || tk.size() != nu) {
            fail("target_kernel", "expected " + std::to_string(nu) + " u-slices");
        }
        std::vector<std::vector<double>> rows;
        for (std::size_t iu = 0; iu < nu; ++iu) {
            const auto& ux = tk[iu];
            if (!ux.is_array() || ux.size() != nx) {
                fail("target_kernel[" + std::to_string(iu) + "]",
                     "expected " + std::to_string(nx) + " x-slices");
            }
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const auto& uxy = ux[ix];
                if (!uxy.is_array() || uxy.size() != ny) {
                    fail("target_kernel[" + std::to_string(iu) + "][" + std::to_string(ix) + "]",
                         "expected " + std::to_string(ny) + " y-slices");
                }
                for (std::size_t iy = 0; iy < ny; ++iy) {
                    rows.push_back(stochastic_row(
                        uxy[iy], nv,
                        "target_kernel[" + std::to_string(iu) + "][" + std::to_string(ix) +
                            "][" + std::to_string(iy) + "]"));
                }
            }
        }
        target_kernel = Kernel({u, x, y}, {v}, std::move(rows));
    }

    return CoordinationProblem{setting, std::move(source), std::move(channel),
                               std::move(*input_policy), std::move(target_kernel)};
}

CoordinationProblem load_problem(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProblemFormatError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_problem_text(buffer.str());
}

std::string problem_to_json(const CoordinationProblem& problem) {
    ordered_json doc;
    doc["setting"] = std::string(to_string(problem.setting));

    const auto& u = problem.source.to()[0];
    const auto& x = problem.channel.from()[0];
    const auto& y = problem.channel.to()[0];
    const Alphabet* v = nullptr;
    if (problem.target_kernel) {
        v = &problem.target_kernel->to()[0];
    } else {
        v = &problem.input_policy.to()[1];
    }

    ordered_json alphabets;
    for (const Alphabet* a : {&u, &x, &y, v}) {
        alphabets[a->name()] = a->symbols();
    }
    doc["alphabets"] = std::move(alphabets);

    doc["source"] = std::vector<double>(problem.source.row(0).begin(), problem.source.row(0).end());

    ordered_json channel = ordered_json::array();
    for (std::size_t r = 0; r < problem.channel.row_count(); ++r) {
        channel.push_back(
            std::vector<double>(problem.channel.row(r).begin(), problem.channel.row(r).end()));
    }
    doc["channel"] = std::move(channel);

    std::string shape = "x";
    if (!problem.input_policy.from().empty()) {
        shape = problem.input_policy.to().size() == 2 ? "xv_given_u" : "x_given_u";
    }
    ordered_json table = ordered_json::array();
    for (std::size_t r = 0; r < problem.input_policy.row_count(); ++r) {
        table.push_back(std::vector<double>(problem.input_policy.row(r).begin(),
                                            problem.input_policy.row(r).end()));
    }
    doc["input_policy"] = ordered_json{{"shape", shape}, {"table", std::move(table)}};

    if (problem.target_kernel) {
        const auto& tk = *problem.target_kernel;
        ordered_json u_slices = ordered_json::array();
        std::size_t row = 0;
        for (int iu = 0; iu < u.size(); ++iu) {
            ordered_json x_slices = ordered_json::array();
            for (int ix = 0; ix < x.size(); ++ix) {
                ordered_json y_slices = ordered_json::array();
                for (int iy = 0; iy < y.size(); ++iy, ++row) {
                    y_slices.push_back(std::vector<double>(tk.row(row).begin(), tk.row(row).end()));
                }
                x_slices.push_back(std::move(y_slices));
            }
            u_slices.push_back(std::move(x_slices));
        }
        doc["target_kernel"] = std::move(u_slices);
    }
    return doc.dump(2) + "\n";
}

void save_problem(const std::string& path, const CoordinationProblem& problem) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << problem_to_json(problem);
}

std::string digest_bytes(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << "fnv1a:" << std::hex << h;
    return os.str();
}

}  // namespace coord

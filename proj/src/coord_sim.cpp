#include "coordination/coord_sim.hpp"

#include <cmath>
#include <ostream>

#include "coordination/errors.hpp"

namespace coord {

namespace {

constexpr std::uint64_t kWTag = 0x77u;
constexpr std::uint64_t kVTag = 0x76u;
constexpr std::uint64_t kBookTag = 0xb00cu;
constexpr std::uint64_t kSourceTag = 0x501u;
constexpr std::uint64_t kInputTag = 0xa11u;
constexpr std::uint64_t kChannelTag = 0xc4au;

using Names = std::vector<std::string>;

JointDist canonical_extension(const JointDist& e, SimScheme scheme) {
    if (scheme == SimScheme::W_EQUALS_X) {
        return embed_w_equals_x(marginalize(e, base_variable_names()));
    }
    if (!e.has_variable("W")) {
        throw VariableMismatchError("the generic scheme needs an extension with W");
    }
    const Names canonical{"U", "W", "X", "Y", "V"};
    return marginalize(e, canonical);
}

std::vector<int> sample_block(std::span<const double> probs, int n, Rng& rng) {
    std::vector<int> block(static_cast<std::size_t>(n));
    for (auto& s : block) s = rng.sample(probs);
    return block;
}

struct Wilson {
    double low, high;
};

Wilson wilson_interval(double p_hat, int n) {
    const double z = 1.959963984540054;  // 95%
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p_hat + z2 / (2.0 * n)) / denom;
    const double half =
        z * std::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * static_cast<double>(n) * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace

Codebooks::Codebooks(JointDist extended, int n, double rate, std::uint64_t generation_seed)
    : extended_(std::move(extended)),
      enc_target_(marginalize(extended_, Names{"U", "Y", "W", "V"})),
      yw_target_(marginalize(extended_, Names{"Y", "W"})),
      ywv_target_(marginalize(extended_, Names{"Y", "W", "V"})),
      n_(n),
      rate_(rate),
      generation_seed_(generation_seed) {
    if (n < 1) throw std::invalid_argument("block length must be >= 1");
    if (rate < 0.0) throw std::invalid_argument("rate must be nonnegative");
    const double count = std::exp2(static_cast<double>(n) * rate);
    if (count > 2147483648.0) {  // 2^31
        throw SizeGuardError("message count 2^(n*R) = 2^" +
                             std::to_string(static_cast<double>(n) * rate) +
                             " exceeds the desk-scale guard; lower the rate override");
    }
    message_count_ = static_cast<std::uint64_t>(std::ceil(count - 1e-9));
    if (message_count_ < 1) message_count_ = 1;

    w_dist_ = marginalize(extended_, Names{"W"}).mass();
    const Kernel v_given_w = condition(marginalize(extended_, Names{"W", "V"}), Names{"W"});
    v_given_w_.reserve(v_given_w.row_count());
    for (std::size_t r = 0; r < v_given_w.row_count(); ++r) {
        v_given_w_.emplace_back(v_given_w.row(r).begin(), v_given_w.row(r).end());
    }
}

std::vector<int> Codebooks::w_word(std::uint64_t m) const {
    Rng rng(mix_seed(generation_seed_, kWTag, m));
    return sample_block(w_dist_, n_, rng);
}

std::vector<int> Codebooks::v_word(std::uint64_t m, std::uint64_t m_hat) const {
    const std::vector<int> w = w_word(m);
    Rng rng(mix_seed(mix_seed(generation_seed_, kVTag, m), m_hat));
    std::vector<int> v(static_cast<std::size_t>(n_));
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = rng.sample(v_given_w_[static_cast<std::size_t>(w[i])]);
    }
    return v;
}

Codebooks build_codebooks(const JointDist& extended, const SimConfig& cfg) {
    const JointDist e = canonical_extension(extended, cfg.scheme);
    const RateWindow window = rate_window(e, cfg.delta);
    if (!window.feasible) {
        throw RateWindowEmptyError("rate window is empty: the information constraint does not "
                                   "exceed 2*delta = " +
                                   std::to_string(2 * cfg.delta));
    }
    const double rate = cfg.rate_override.value_or(0.5 * (window.r_min + window.r_max));
    const std::uint64_t gen_seed = cfg.codebook_seed.value_or(mix_seed(cfg.seed, kBookTag));
    return Codebooks(e, cfg.n, rate, gen_seed);
}

EncodeResult encoder_step(const Codebooks& books, std::uint64_t m_prev,
                          const std::vector<int>& u_prev, const std::vector<int>& y_prev,
                          double typ_tol) {
    std::vector<std::vector<int>> seqs{u_prev, y_prev, books.w_word(m_prev), {}};
    for (std::uint64_t m = 1; m <= books.message_count(); ++m) {
        seqs[3] = books.v_word(m_prev, m);
        if (is_typical(seqs, books.encoder_target(), typ_tol)) {
            return {m, true};
        }
    }
    return {1, false};
}

DecodeResult decoder_step(const Codebooks& books, std::uint64_t m_prev,
                          const std::vector<int>& y_prev, const std::vector<int>& y_curr,
                          double typ_tol) {
    std::vector<std::vector<int>> current{y_curr, {}};
    std::vector<std::vector<int>> previous{y_prev, books.w_word(m_prev), {}};

    std::uint64_t best = 0;
    bool ambiguous = false;
    for (std::uint64_t m = 1; m <= books.message_count(); ++m) {
        current[1] = books.w_word(m);
        if (!is_typical(current, books.decoder_target_yw(), typ_tol)) continue;
        previous[2] = books.v_word(m_prev, m);
        if (!is_typical(previous, books.decoder_target_ywv(), typ_tol)) continue;
        if (best == 0) {
            best = m;
        } else {
            ambiguous = true;
            break;
        }
    }
    if (best == 0) {
        return {1, books.v_word(m_prev, 1), false, false};
    }
    return {best, books.v_word(m_prev, best), true, ambiguous};
}

std::vector<int> simulate_channel(const std::vector<int>& x_block, const Kernel& channel,
                                  Rng& rng) {
    const int nx = channel.from().at(0).size();
    std::vector<int> y(x_block.size());
    for (std::size_t i = 0; i < x_block.size(); ++i) {
        if (x_block[i] < 0 || x_block[i] >= nx) {
            throw std::out_of_range("channel input symbol " + std::to_string(x_block[i]) +
                                    " outside the input alphabet");
        }
        y[i] = rng.sample(channel.row(static_cast<std::size_t>(x_block[i])));
    }
    return y;
}

namespace {

JointDist session_empirical(const std::vector<Alphabet>& base_vars, const SessionTrace& trace,
                            std::size_t first_block, std::size_t last_block_exclusive) {
    std::vector<std::vector<int>> seqs(4);
    for (std::size_t b = first_block; b < last_block_exclusive; ++b) {
        seqs[0].insert(seqs[0].end(), trace.u_blocks[b].begin(), trace.u_blocks[b].end());
        seqs[1].insert(seqs[1].end(), trace.x_blocks[b].begin(), trace.x_blocks[b].end());
        seqs[2].insert(seqs[2].end(), trace.y_blocks[b].begin(), trace.y_blocks[b].end());
        seqs[3].insert(seqs[3].end(), trace.v_blocks[b].begin(), trace.v_blocks[b].end());
    }
    return empirical_distribution(base_vars, seqs);
}

}  // namespace

std::pair<SessionTrace, SimReport> run_session(const CoordinationProblem& problem,
                                               const JointDist& extended, const SimConfig& cfg) {
    if (cfg.n < 1) throw std::invalid_argument("block length must be >= 1");
    if (cfg.block_count < 2) throw std::invalid_argument("block count must be >= 2");
    const Codebooks books = build_codebooks(extended, cfg);
    const JointDist& e = books.extended();
    const JointDist target = marginalize(e, base_variable_names());
    const double typ_tol = cfg.resolved_typ_tol();
    const std::size_t B = static_cast<std::size_t>(cfg.block_count);

    const Kernel x_given_uw = condition(marginalize(e, Names{"U", "W", "X"}), Names{"U", "W"});
    const int nw = e.variables()[1].size();

    SessionTrace trace;
    trace.u_blocks.resize(B);
    trace.x_blocks.resize(B);
    trace.y_blocks.resize(B);
    trace.v_blocks.resize(B);
    trace.chosen_indices.assign(B, 1);
    trace.decoded_indices.assign(B, 1);
    trace.encoder_failures.assign(B, 0);
    trace.decoder_failures.assign(B, 0);

    // forward pass: source, encoding, channel
    for (std::size_t b = 0; b < B; ++b) {
        Rng source_rng(mix_seed(cfg.seed, kSourceTag, b));
        trace.u_blocks[b] = sample_block(problem.source.row(0), cfg.n, source_rng);

        if (b == 0) {
            trace.chosen_indices[b] = 1;  // the shared arbitrary first index
        } else {
            const EncodeResult enc =
                encoder_step(books, trace.chosen_indices[b - 1], trace.u_blocks[b - 1],
                             trace.y_blocks[b - 1], typ_tol);
            trace.chosen_indices[b] = enc.m_next;
            trace.encoder_failures[b] = enc.found ? 0 : 1;
        }

        // channel input drawn letterwise against (current source, auxiliary
        // codeword); under the W = X embedding this is the deterministic copy
        const std::vector<int> w = books.w_word(trace.chosen_indices[b]);
        Rng input_rng(mix_seed(cfg.seed, kInputTag, b));
        std::vector<int>& x = trace.x_blocks[b];
        x.resize(static_cast<std::size_t>(cfg.n));
        std::vector<int> cond(2);
        for (std::size_t i = 0; i < x.size(); ++i) {
            cond[0] = trace.u_blocks[b][i];
            cond[1] = w[i];
            const std::size_t row = static_cast<std::size_t>(cond[0] * nw + cond[1]);
            x[i] = input_rng.sample(x_given_uw.row(row));
        }

        Rng channel_rng(mix_seed(cfg.seed, kChannelTag, b));
        trace.y_blocks[b] = simulate_channel(x, problem.channel, channel_rng);
    }

    // backward-compatible decoding: block b's decode emits block b-1's output,
    // so the failure flag sits on the block whose reconstruction it affects
    for (std::size_t b = 1; b < B; ++b) {
        const DecodeResult dec = decoder_step(books, trace.decoded_indices[b - 1],
                                              trace.y_blocks[b - 1], trace.y_blocks[b], typ_tol);
        trace.decoded_indices[b] = dec.m_hat;
        trace.v_blocks[b - 1] = dec.v_prev;
        trace.decoder_failures[b - 1] = dec.found ? 0 : 1;
        if (dec.ambiguous) ++trace.decode_ambiguities;
    }
    // last block: no later block decodes it; emit the fixed fallback word
    trace.v_blocks[B - 1] = books.v_word(trace.decoded_indices[B - 1], 1);
    trace.decoder_failures[B - 1] = 1;

    const auto& base_vars = target.variables();
    JointDist all = session_empirical(base_vars, trace, 0, B);
    JointDist core = (B > 2) ? session_empirical(base_vars, trace, 1, B - 1) : all;
    const double tv_all = total_variation(all, target);
    const double tv_core = total_variation(core, target);
    const double p_err = tv_all >= cfg.coord_tol ? 1.0 : 0.0;

    long enc_fail = 0, dec_fail = 0;
    for (std::size_t b = 0; b < B; ++b) {
        enc_fail += trace.encoder_failures[b];
        dec_fail += trace.decoder_failures[b];
    }

    SimReport report{std::move(all), std::move(core), tv_all, tv_core,
                     p_err,          p_err,           p_err,  enc_fail,
                     dec_fail,       trace.decode_ambiguities, 1};
    return {std::move(trace), std::move(report)};
}

SimReport estimate_error_probability(const CoordinationProblem& problem,
                                     const JointDist& extended, const SimConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");

    std::vector<double> pooled_all, pooled_core;
    int errors = 0;
    long enc_fail = 0, dec_fail = 0, ambiguities = 0;
    std::optional<JointDist> shape_all, shape_core;

    for (int t = 0; t < cfg.trials; ++t) {
        SimConfig trial_cfg = cfg;
        trial_cfg.seed = cfg.seed + static_cast<std::uint64_t>(t);
        auto [trace, report] = run_session(problem, extended, trial_cfg);
        (void)trace;
        if (!shape_all) {
            shape_all = report.empirical_all;
            shape_core = report.empirical_core;
            pooled_all.assign(report.empirical_all.cell_count(), 0.0);
            pooled_core.assign(report.empirical_core.cell_count(), 0.0);
        }
        for (std::size_t i = 0; i < pooled_all.size(); ++i) {
            pooled_all[i] += report.empirical_all.mass_at(i) / cfg.trials;
            pooled_core[i] += report.empirical_core.mass_at(i) / cfg.trials;
        }
        if (report.tv_all >= cfg.coord_tol) ++errors;
        enc_fail += report.encoder_failures;
        dec_fail += report.decoder_failures;
        ambiguities += report.decode_ambiguities;
    }

    // pooled masses can drift off unity by accumulated rounding; renormalize
    for (auto* v : {&pooled_all, &pooled_core}) {
        double sum = 0.0;
        for (double x : *v) sum += x;
        for (double& x : *v) x /= sum;
    }

    const JointDist target =
        marginalize(canonical_extension(extended, cfg.scheme), base_variable_names());
    JointDist all(shape_all->variables(), pooled_all);
    JointDist core(shape_core->variables(), pooled_core);
    const double tv_all = total_variation(all, target);
    const double tv_core = total_variation(core, target);
    const double p_hat = static_cast<double>(errors) / cfg.trials;
    const Wilson ci = wilson_interval(p_hat, cfg.trials);

    return SimReport{std::move(all), std::move(core), tv_all,   tv_core, p_hat, ci.low,
                     ci.high,        enc_fail,        dec_fail, ambiguities, cfg.trials};
}

void write_trace(std::ostream& os, const SessionTrace& trace,
                 const std::vector<Alphabet>& base_variables) {
    os << "pos block u x y v m m_hat\n";
    std::size_t pos = 0;
    for (std::size_t b = 0; b < trace.u_blocks.size(); ++b) {
        for (std::size_t i = 0; i < trace.u_blocks[b].size(); ++i, ++pos) {
            os << pos << ' ' << (b + 1) << ' '
               << base_variables[0].symbol(trace.u_blocks[b][i]) << ' '
               << base_variables[1].symbol(trace.x_blocks[b][i]) << ' '
               << base_variables[2].symbol(trace.y_blocks[b][i]) << ' '
               << base_variables[3].symbol(trace.v_blocks[b][i]) << ' '
               << trace.chosen_indices[b] << ' ' << trace.decoded_indices[b] << '\n';
        }
    }
}

}  // namespace coord

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "coordination/empirical.hpp"
#include "coordination/rng.hpp"
#include "coordination/settings.hpp"

namespace coord {

enum class SimScheme {
    GENERIC_W,    // run the scheme on a given auxiliary extension
    W_EQUALS_X,   // specialize the auxiliary to the channel input
};

struct SimConfig {
    int n = 100;           // block length
    int block_count = 10;  // number of blocks B >= 2 (first and last are special)
    double delta = 0.01;   // rate margin
    std::optional<double> rate_override;  // bits; default: rate-window midpoint
    double coord_tol = 0.2;  // coordination tolerance on the session empirical
    double typ_tol = 0.0;    // typicality tolerance; 0 resolves to coord_tol / 2
    std::uint64_t seed = kDefaultSeed;
    int trials = 20;
    SimScheme scheme = SimScheme::W_EQUALS_X;
    // debugging only: pin the codebook draw across trials instead of the
    // default fresh-codebook-per-trial behavior
    std::optional<std::uint64_t> codebook_seed;

    double resolved_typ_tol() const { return typ_tol > 0.0 ? typ_tol : coord_tol / 2.0; }
};

// Random codebooks of the block-Markov scheme. Codewords are pure functions
// of (generation_seed, index), generated on demand: W^n(m) is drawn letterwise
// from the auxiliary marginal and V^n(m, m_hat) letterwise from the
// reconstruction-given-auxiliary kernel against W^n(m).
class Codebooks {
public:
    Codebooks(JointDist extended, int n, double rate, std::uint64_t generation_seed);

    std::uint64_t message_count() const { return message_count_; }
    double rate() const { return rate_; }
    int block_length() const { return n_; }
    std::uint64_t generation_seed() const { return generation_seed_; }

    std::vector<int> w_word(std::uint64_t m) const;                       // 1-based m
    std::vector<int> v_word(std::uint64_t m, std::uint64_t m_hat) const;  // 1-based

    const JointDist& extended() const { return extended_; }
    const JointDist& encoder_target() const { return enc_target_; }   // (U,Y,W,V)
    const JointDist& decoder_target_yw() const { return yw_target_; } // (Y,W)
    const JointDist& decoder_target_ywv() const { return ywv_target_; } // (Y,W,V)

private:
    JointDist extended_;
    JointDist enc_target_;
    JointDist yw_target_;
    JointDist ywv_target_;
    std::vector<double> w_dist_;
    std::vector<std::vector<double>> v_given_w_;
    int n_ = 0;
    double rate_ = 0.0;
    std::uint64_t message_count_ = 0;
    std::uint64_t generation_seed_ = 0;
};

// Verifies the rate window is nonempty for (extended, cfg.delta), picks the
// rate (override or window midpoint), and sets up deterministic codebooks.
// Throws RateWindowEmptyError when the interval is void and SizeGuardError
// when the message count would exceed the desk-scale guard (2^31).
Codebooks build_codebooks(const JointDist& extended, const SimConfig& cfg);

struct EncodeResult {
    std::uint64_t m_next = 1;
    bool found = false;
};

// Smallest message index whose reconstruction codeword is jointly typical
// with the previous block's (source, channel output, auxiliary codeword);
// falls back to index 1 when none qualifies.
EncodeResult encoder_step(const Codebooks& books, std::uint64_t m_prev,
                          const std::vector<int>& u_prev, const std::vector<int>& y_prev,
                          double typ_tol);

struct DecodeResult {
    std::uint64_t m_hat = 1;
    std::vector<int> v_prev;
    bool found = false;
    bool ambiguous = false;  // a second qualifying index existed
};

// Smallest index typical with the current block's output and consistent with
// the previous block's triple; emits the previous block's reconstruction.
DecodeResult decoder_step(const Codebooks& books, std::uint64_t m_prev,
                          const std::vector<int>& y_prev, const std::vector<int>& y_curr,
                          double typ_tol);

// Memoryless channel application, one independent draw per letter.
std::vector<int> simulate_channel(const std::vector<int>& x_block, const Kernel& channel,
                                  Rng& rng);

struct SessionTrace {
    std::vector<std::vector<int>> u_blocks, x_blocks, y_blocks, v_blocks;
    std::vector<std::uint64_t> chosen_indices;   // encoder chain, m_1 = 1
    std::vector<std::uint64_t> decoded_indices;  // decoder chain
    std::vector<std::uint8_t> encoder_failures;  // per block
    std::vector<std::uint8_t> decoder_failures;  // per block
    long decode_ambiguities = 0;
};

struct SimReport {
    JointDist empirical_all;   // over (U,X,Y,V), all n*B positions
    JointDist empirical_core;  // excluding first and last blocks (all blocks when B = 2)
    double tv_all = 0.0;
    double tv_core = 0.0;
    double p_error_estimate = 0.0;  // fraction of trials with tv_all >= coord_tol
    double p_error_low = 0.0;       // 95% Wilson interval
    double p_error_high = 1.0;
    long encoder_failures = 0;
    long decoder_failures = 0;
    long decode_ambiguities = 0;
    int trials = 1;
};

// One full block-Markov session. The extension is taken as given under
// GENERIC_W; under W_EQUALS_X the auxiliary is rebuilt as a copy of the
// channel input of `extended`'s (U,X,Y,V)-marginal.
std::pair<SessionTrace, SimReport> run_session(const CoordinationProblem& problem,
                                               const JointDist& extended, const SimConfig& cfg);

// cfg.trials independent sessions with per-trial seeds cfg.seed + t and fresh
// codebooks per trial; pools the empirical distributions and aggregates the
// error-probability estimate with a 95% binomial interval.
SimReport estimate_error_probability(const CoordinationProblem& problem,
                                     const JointDist& extended, const SimConfig& cfg);

// Columnar text export: position, block, and one symbol column per variable.
void write_trace(std::ostream& os, const SessionTrace& trace,
                 const std::vector<Alphabet>& base_variables);

}  // namespace coord

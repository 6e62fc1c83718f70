#pragma once

#include <stdexcept>
#include <string>

#include "coordination/settings.hpp"

namespace coord {

// Malformed or inconsistent problem file; the message carries the field path.
struct ProblemFormatError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Parse a problem document (JSON). Tables must be row-stochastic within 1e-9
// and are renormalized exactly on ingest. The input-policy shape tag must
// match the setting: "x" for strictly causal encoding, "x_given_u" for causal
// encoding / causal decoding with feedback, "xv_given_u" for the
// strictly-causal decoding settings.
CoordinationProblem parse_problem_text(const std::string& text);

CoordinationProblem load_problem(const std::string& path);

std::string problem_to_json(const CoordinationProblem& problem);

void save_problem(const std::string& path, const CoordinationProblem& problem);

// FNV-1a 64-bit digest of a byte string, rendered as "fnv1a:<hex>".
std::string digest_bytes(const std::string& bytes);

}  // namespace coord

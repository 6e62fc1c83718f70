#pragma once

#include <cstdint>
#include <string>

#include "coordination/rng.hpp"
#include "coordination/settings.hpp"

namespace coord {

struct OptimizerConfig {
    int aux_cardinality = 0;  // 0 resolves to |U||X||Y||V| + 2
    int restarts = 8;
    int max_iterations = 400;
    double penalty_weight = 50.0;
    double feasibility_tol = 1e-6;
    std::uint64_t seed = kDefaultSeed;
};

struct AuxSolution {
    JointDist extended;           // over (U, aux, X, Y, V)
    double value = 0.0;           // setting objective at `extended`, bits
    double feasibility_residual = 0.0;  // max violation from check_admissible
    std::string method;           // "multistart" or "oracle"
    long evaluations = 0;
    int aux_cardinality = 0;
    double grid_spacing = 0.0;    // oracle only: 1/grid
};

// Maximize the setting objective over the admissible auxiliary extensions of
// the problem's target. Multistart projected ascent over the setting's free
// kernels with a quadratic penalty on target-marginal mismatch, followed by a
// repair polish; explicitly constructed witnesses (constant aux, W = X,
// W2 = V where admissible) are always part of the candidate pool.
// Deterministic given cfg.seed. Throws InfeasibleSearchError when no
// candidate reaches cfg.feasibility_tol.
AuxSolution maximize(SettingId setting, const CoordinationProblem& problem,
                     const OptimizerConfig& cfg);

// Independent verification oracle: exhaustively enumerates simplex grid
// points (denominator `grid`) for the free kernel rows that are not pinned
// by target consistency, derives the pinned rows by linear solves, filters
// infeasible candidates, and keeps the best. The value is a lower bound on
// the true maximum; `grid_spacing` reports the resolution. Throws
// SizeGuardError when more than 12 scalars would be enumerated.
AuxSolution brute_force_oracle(SettingId setting, const CoordinationProblem& problem,
                               int aux_cardinality, int grid);

// Project an extended distribution back onto the setting's factorized family
// with the (U,X,Y,V)-marginal re-matched to the target where a linear row
// correction can do so. Idempotent on admissible inputs. Throws
// NonConvergenceError when the sweep budget is exhausted.
JointDist repair_to_admissible(SettingId setting, const JointDist& extended,
                               const JointDist& target, int sweep_budget = 200,
                               double tol = 1e-9);

// Feedback gap for strictly causal encoding: the auxiliary-free feedback
// constraint of the target minus the maximized no-feedback objective.
// Nonnegative up to optimizer slack.
double feedback_gap_sc(const JointDist& target, const AuxSolution& best_nofb);

}  // namespace coord

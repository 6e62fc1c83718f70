#pragma once

#include <iosfwd>
#include <vector>

#include "coordination/settings.hpp"

namespace coord {

// Binary source / binary symmetric channel worked example with an 8-symbol
// reconstruction alphabet. `alpha` controls how tightly V is coordinated
// with the triple (U, X, Y): alpha = 0 reproduces the triple exactly,
// alpha = 7/8 makes V uniform and independent.
struct ExampleParams {
    double alpha = 0.0;   // in [0, 7/8]
    double noise = 0.0;   // channel flip probability, in [0, 0.5]
};

inline constexpr double kAlphaMax = 7.0 / 8.0;

// Uniform binary source, BSC(noise) channel, uniform channel input, and the
// matched-symbol kernel: mass 1-alpha on v = 1 + 4u + 2x + y, alpha/7 on each
// of the other seven symbols. Setting: strictly causal encoding w/ feedback.
CoordinationProblem make_target(const ExampleParams& params);

// Closed form of the feedback information constraint for this family:
//   H_b(alpha) - H_b(noise) - H_b(6 alpha / 7) + alpha (log2 7 - 6/7 log2 3)
double constraint_closed_form(const ExampleParams& params);

// Information constraint for lossy transmission without coordination:
//   H_b(alpha) - H_b(noise)
double lossy_constraint(const ExampleParams& params);

// Smallest alpha in [0, 7/8] with a nonnegative coordination constraint,
// found by bisection to 1e-6; returns 7/8 when the constraint never turns
// positive on the interval.
double alpha_star(double noise);

struct CurveTable {
    // alpha, coordination constraint, lossy constraint
    std::vector<std::array<double, 3>> constraint_rows;
    // epsilon, alpha_star(epsilon)
    std::vector<std::array<double, 2>> alpha_star_rows;
};

// Constraint comparison over an alpha grid on [0, 7/8] plus the companion
// alpha_star sweep over noise in [0, 0.5]; `grid` >= 2 points each.
CurveTable emit_curves(double noise, int grid);

// CSV with headers "alpha,coord_constraint,lossy_constraint" and
// "epsilon,alpha_star"
void write_constraint_csv(std::ostream& os, const CurveTable& table);
void write_alpha_star_csv(std::ostream& os, const CurveTable& table);

}  // namespace coord

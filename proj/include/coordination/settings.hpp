#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coordination/info.hpp"
#include "coordination/joint_dist.hpp"

namespace coord {

// The six coding settings. Each maps to exactly one objective formula and
// one admissible set of (possibly auxiliary-extended) distributions.
enum class SettingId {
    SC_ENC_FB,      // strictly causal encoding, channel feedback (auxiliary-free)
    CAUSAL_ENC_FB,  // causal encoding, channel feedback (auxiliary W)
    SC_ENC_NOFB,    // strictly causal encoding, no feedback (auxiliary W2)
    SC_DEC_NOFB,    // strictly causal decoding, no source feedback (auxiliary W1)
    SC_DEC_FB,      // strictly causal decoding, source feedback (auxiliary-free)
    CAUSAL_DEC_FB,  // causal decoding, source feedback (auxiliary W3)
};

std::string_view to_string(SettingId id);
SettingId setting_from_string(std::string_view name);

bool setting_has_auxiliary(SettingId id);
// "W", "W2", "W1" or "W3"; throws for auxiliary-free settings
std::string_view auxiliary_name(SettingId id);

// A coordination target: setting plus the factors that compose the target
// joint over (U, X, Y, V).
//
//   SC_ENC_FB / SC_ENC_NOFB:      source(U) * input_policy(X)    * channel(Y|X) * target_kernel(V|U,X,Y)
//   CAUSAL_ENC_FB / CAUSAL_DEC_FB: source(U) * input_policy(X|U)  * channel(Y|X) * target_kernel(V|U,X,Y)
//   SC_DEC_NOFB / SC_DEC_FB:      source(U) * input_policy(X,V|U) * channel(Y|X)   (no separate target kernel)
struct CoordinationProblem {
    SettingId setting;
    Kernel source;
    Kernel channel;
    Kernel input_policy;
    std::optional<Kernel> target_kernel;
};

// Compose the problem's target joint in canonical (U, X, Y, V) order.
JointDist target_joint(const CoordinationProblem& problem);

struct CheckEntry {
    std::string label;
    double residual = 0.0;
    double tolerance = 0.0;
    bool ok = true;
};

struct ValidationReport {
    bool passed = true;
    std::vector<CheckEntry> checks;

    std::vector<CheckEntry> violations() const;
    double max_residual() const;  // max over failing checks, 0 if none
    double worst_margin() const;  // max over all checks of residual (any state)
};

// Check the structural decomposition the setting imposes on a joint over
// (U, X, Y, V): source marginal, channel consistency, the memoryless Markov
// chain, and (strictly causal encoding with feedback only) independence of
// the channel input from the source. Always returns a report.
ValidationReport validate_decomposition(const CoordinationProblem& problem,
                                        const JointDist& joint);

// I(X;Y) - I(U;V|X,Y) on a strictly-causal-encoding-with-feedback target.
// Throws AdmissibilityError when the joint violates the setting's structure.
double constraint_sc_feedback(const JointDist& joint);

// I(X;Y|U,V) - I(U;V) on a strictly-causal-decoding-with-feedback target.
double constraint_sd_feedback(const JointDist& joint);

// The setting's inner objective for a fixed auxiliary-extended distribution:
//   CAUSAL_ENC_FB:  I(W;Y)    - I(U;V|W,Y)
//   SC_ENC_NOFB:    I(X;Y)    - I(U;W2|X)
//   SC_DEC_NOFB:    I(W1;Y|V) - I(U;V,W1)
//   CAUSAL_DEC_FB:  I(X;Y|U,W3) - I(U;W3)
// Verifies the setting's independence/Markov conditions at `admissibility_tol`
// and throws AdmissibilityError naming the violated condition.
double evaluate_objective(SettingId setting, const JointDist& extended,
                          double admissibility_tol = 1e-6);

// Same objective without any admissibility gate (optimizer inner loop).
double objective_value(SettingId setting, const JointDist& extended);

// Verify that `extended` lies in the setting's admissible set for `target`:
// (i) its (U,X,Y,V)-marginal matches the target, (ii) the setting's
// independence/Markov conditions hold. Report only, never throws.
ValidationReport check_admissible(SettingId setting, const JointDist& extended,
                                  const JointDist& target, double marginal_tol = 1e-9,
                                  double info_tol = 1e-9);

struct RateWindow {
    double r_min = 0.0;
    double r_max = 0.0;
    bool feasible = false;
    double width() const { return r_max - r_min; }
};

// Covering/packing rate interval for an extended distribution with W:
//   r_min = I(U,Y;V|W) + delta,  r_max = I(W,V;Y) - delta.
// The window is nonempty exactly when the causal-feedback objective
// exceeds 2*delta.
RateWindow rate_window(const JointDist& extended, double delta);

// Extend a (U,X,Y,V) target with W := X (order U,W,X,Y,V). The auxiliary
// alphabet copies X's symbols under the name "W".
JointDist embed_w_equals_x(const JointDist& target);

// Canonical variable orders
std::vector<std::string> base_variable_names();                 // U,X,Y,V
std::vector<std::string> extended_variable_names(SettingId id); // U,<aux>,X,Y,V

}  // namespace coord

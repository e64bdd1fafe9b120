#pragma once

#include <map>
#include <string>
#include <vector>

#include "crossdiff/jko.hpp"
#include "crossdiff/model.hpp"

namespace crossdiff {

// ---------------------------------------------------------------------------
// Trajectory diagnostics. Each check replays one a-priori estimate of the
// continuous theory on a computed trajectory and reports the worst slack it
// found, together with the step or time pair that produced it. Checks are
// pure functions of their inputs; rerunning one yields a bit-identical entry.
// ---------------------------------------------------------------------------

/// Compactly supported smooth test function. The plain bump is even around
/// its center; the poly variant multiplies the bump by the odd factor
/// (x - center)/width, which makes it sensitive to flux direction.
struct TestFunction {
    enum class Kind { bump, poly_bump };

    double center = 0.0;
    double width = 1.0;
    Kind kind = Kind::bump;

    double value(double x) const;
    double grad(double x) const;
    double laplacian(double x) const;

    std::vector<double> values(const Grid1D& g) const;
    std::vector<double> grads(const Grid1D& g) const;
};

struct DiagnosticEntry {
    std::string name;
    bool pass = true;
    bool informational = false;
    double slack = 0.0;   // worst signed slack; <= 0 means the bound held
    std::string witness;  // step index or time pair of the worst sample
    std::map<std::string, double> fitted;
};

struct DiagnosticsReport {
    std::vector<DiagnosticEntry> entries;
    bool all_pass() const;
    const DiagnosticEntry* find(const std::string& name) const;
};

struct DiagnosticsConfig {
    double inner_tol = 1e-9;   // the stepper's stopping tolerance
    double s_max = 1e-4;       // heat-flow horizon of the interchange check
    int n_heat_steps = 5;      // implicit substeps across s_max
    int holder_pairs = 64;     // sampled time pairs of the continuity check
    double rel_slack = 1e-3;   // relative tolerance of the interchange bounds
};

/// Backward-Euler heat flow: n_steps implicit centered-difference steps of
/// size s/n_steps with no-flux walls. Conserves the sum exactly (up to the
/// linear solve) and makes nonnegative data strictly positive, which is what
/// lets the interchange check form powers below 2 safely.
std::vector<double> heat_implicit(std::vector<double> u, double h, double s, int n_steps);

/// Discrete  h sum |d/dx rho^{m/2}|^2  with centered interior differences and
/// one-sided differences at the walls.
double gradient_power_norm(const Density& rho, double m);

// --- per-step estimates -----------------------------------------------------

/// Moving cost + new energy must not exceed the previous energy, step by step.
/// Verified on the recorded step objectives, which live in the stepper's own
/// quadrature; that is the form the scheme guarantees to inner_tol.
DiagnosticEntry check_one_step(const Trajectory& traj, double inner_tol);

/// Strengthened form: (1/4 tau) W2^2 <= Ftilde drop + (Lip K1^2 + Lip K2^2) tau.
/// Also asserts the chain: its slack never exceeds the one-step slack.
DiagnosticEntry check_dissipation(const Trajectory& traj, const ModelSpec& model,
                                  double inner_tol);

/// m2(next) <= 2 m2(prev) + 2 W2^2 for every consecutive pair, and the
/// affine-in-time envelope m2(t) <= a + b t fitted on the first half of the
/// trajectory and validated on the second.
DiagnosticEntry check_moments(const Trajectory& traj);

// --- path estimates ----------------------------------------------------------

/// Interpolation-in-time continuity: W2 between snapshots is controlled by
/// c (sqrt|t-s| + sqrt tau). Fits c and the exponent on half of the sampled
/// pairs, validates on the other half.
DiagnosticEntry check_holder(const Trajectory& traj, int n_pairs);

/// sup_t of h sum rho_i^{m_i} against (Ftilde[rho0] + C T) / C_lower, with
/// C the squared cross-kernel Lipschitz sum and C_lower the declared constant
/// of the diffusion lower bound. Records the growth-norm sups as fitted data.
DiagnosticEntry check_norm_bounds(const Trajectory& traj, const ModelSpec& model);

/// Entropy dissipated along the heat flow started at each accepted state:
/// the finite-s dissipation quotient dominates the coercive gradient term and
/// is itself dominated by the entropy drop across the step; accumulated, it
/// reproduces the integrated gradient bound.
DiagnosticEntry check_flow_interchange(const Trajectory& traj, const ModelSpec& model,
                                       const DiagnosticsConfig& cfg);

/// Boltzmann entropy against the second moment from below and the power sums
/// from above (x log x < x^m pointwise for m > 1).
DiagnosticEntry check_entropy_bounds(const Trajectory& traj, const ModelSpec& model);

/// Stability of the accumulated squared gradient norm under halving tau: the
/// two sums must agree within a factor of two. Takes the two trajectories.
DiagnosticEntry check_h1_refinement(const Trajectory& coarse, const Trajectory& fine,
                                    const ModelSpec& model);

// --- weak form and perturbation lemma ----------------------------------------

/// Residual of the discrete weak formulation of one species over the window
/// of steps (begin, end]: time difference of int phi d rho against the
/// accumulated diffusion, symmetrized self-kernel and frozen cross-kernel
/// terms. Expected O(tau + h) under refinement. Throws UnsupportedWindow when
/// the window is empty, out of range, or phi touches the walls.
double weak_residual(const Trajectory& traj, const ModelSpec& model, const TestFunction& phi,
                     int species, int step_begin, int step_end);

/// First-order convergence of the perturbation difference quotient
/// (f(x + eps zeta(x)) - f(x))/eps toward zeta f' in L2. eps_list must be
/// decreasing; halved entries must shrink the error by at least 1.8. Throws
/// NonMonotonePerturbation when eps Lip(zeta) >= 1.
DiagnosticEntry check_difference_quotient(const std::vector<double>& f, const Grid1D& grid,
                                          const TestFunction& zeta,
                                          const std::vector<double>& eps_list);

/// Every check above on one trajectory, in a fixed order.
DiagnosticsReport run_diagnostics(const Trajectory& traj, const ModelSpec& model,
                                  const DiagnosticsConfig& cfg);

} // namespace crossdiff

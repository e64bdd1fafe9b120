#pragma once

#include <vector>

#include "crossdiff/model.hpp"
#include "crossdiff/transport.hpp"

namespace crossdiff {

// ---------------------------------------------------------------------------
// Minimizing-movement time stepper. Each step solves
//
//   rho^{n+1}  =  argmin  (1/2 tau) W2^2(rho^n, rho) + F[rho | rho^n]
//
// over pairs of probability densities, with the cross-interaction terms of F
// frozen at the previous state. Candidates are parametrized in Lagrangian
// form: the quantile function of each species is the exact quantile of rho^n
// plus a piecewise-linear displacement on n_q nodes, so the zero displacement
// reproduces rho^n exactly and the metric term is a closed-form quadratic.
// ---------------------------------------------------------------------------

struct JkoConfig {
    double tau = 1e-3;
    int n_q = 0;              // displacement nodes per species; 0 = 4x cell count
    double inner_tol = 1e-9;  // stop when a full sweep decreases J by less
    int max_inner_iters = 500;
    double step_shrink = 0.5; // backtracking factor of the inner line search
    double step_grow = 1.3;   // relaxation growth after an accepted step
    double boundary_margin = 0.0; // escape monitor width; 0 = 5 cells
    double boundary_tol = 1e-6;   // tolerated mass within the margin

    bool operator==(const JkoConfig&) const = default;
};

struct StepRecord {
    double tau = 0.0;
    double w2_sq = 0.0;       // product-metric squared distance moved
    EnergySplit energy;       // relative energy of the accepted pair
    double entropy = 0.0;
    double objective_initial = 0.0; // J at zero displacement (inner quadrature)
    double objective_final = 0.0;
    int inner_iters = 0;      // block-descent sweeps spent
};

struct Trajectory {
    Grid1D grid;
    double tau = 0.0;
    std::vector<SpeciesPair> states; // states[0] is the initial pair
    std::vector<StepRecord> steps;   // steps[k] produced states[k+1]

    double final_time() const { return tau * static_cast<double>(steps.size()); }
    /// Index of the piecewise-constant interpolant at time t: the scheme holds
    /// states[k] on the interval ((k-1) tau, k tau]. Throws OutOfRange.
    int index_at(double t) const;
    const SpeciesPair& at_time(double t) const { return states[index_at(t)]; }
};

/// One minimizing-movement step. Throws InnerSolverStalled if the descent
/// cannot make progress with a non-negligible gradient, BoundaryEscape if
/// mass accumulates near the grid ends.
SpeciesPair jko_step(const SpeciesPair& prev, const ModelSpec& model, const JkoConfig& cfg,
                     StepRecord* record = nullptr);

/// Run floor(horizon / tau) steps from the initial pair. When `progress` is
/// given the trajectory is built in place there, so the completed prefix
/// survives a mid-run throw for a partial flush; on success the result is
/// moved out of *progress.
Trajectory run_scheme(const SpeciesPair& initial, const ModelSpec& model, const JkoConfig& cfg,
                      double horizon, Trajectory* progress = nullptr);

} // namespace crossdiff

#pragma once

#include <vector>

#include "crossdiff/grid.hpp"

namespace crossdiff {

/// Piecewise-linear CDF of a cell-average density: knots at cell boundaries,
/// cum[j] = mass of cells 0..j-1. The quantile function is its generalized
/// inverse (jumps across vacuum runs).
struct PiecewiseCdf {
    Grid1D grid;
    std::vector<double> cum; // size n_cells + 1, cum[0] = 0

    explicit PiecewiseCdf(const Density& rho);

    double mass() const { return cum.back(); }
    /// Exact quantile at mass level s in [0, mass].
    double quantile_at(double s) const;
};

/// Quantile vector sampled at the midpoint levels s_k = (k + 1/2)/n_q.
struct QuantileVector {
    int n_q = 0;
    std::vector<double> values;
};

/// Sample the quantile function of rho at midpoint levels. Requires
/// n_q >= n_cells (the vector must resolve the mesh).
QuantileVector quantile(const Density& rho, int n_q);

/// 1-D quadratic Wasserstein distance via the quantile representation:
/// W2^2 = (1/n_q) sum_k |Q_mu(s_k) - Q_nu(s_k)|^2.
double w2(const Density& mu, const Density& nu, int n_q);

/// Squared product-space distance: W2^2(mu1,nu1) + W2^2(mu2,nu2).
double product_w2_sq(const SpeciesPair& mu, const SpeciesPair& nu, int n_q);

/// Monotone rearrangement T = F_nu^{-1} o F_mu sampled at cell centers; in one
/// dimension this is the optimal transport map from mu to nu. Requires mu to
/// have connected support (no interior vacuum), else DegenerateSupport.
std::vector<double> optimal_map(const Density& mu, const Density& nu);

/// Default quantile resolution used when a caller passes n_q = 0.
int default_n_q(const Grid1D& grid);

} // namespace crossdiff

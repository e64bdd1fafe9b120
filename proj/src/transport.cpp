#include "crossdiff/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace crossdiff {

int default_n_q(const Grid1D& grid) { return 4 * grid.n_cells; }

PiecewiseCdf::PiecewiseCdf(const Density& rho) : grid(rho.grid()) {
    const int n = grid.n_cells;
    cum.assign(n + 1, 0.0);
    for (int j = 0; j < n; ++j) cum[j + 1] = cum[j] + grid.h * rho[j];
}

double PiecewiseCdf::quantile_at(double s) const {
    const int n = grid.n_cells;
    if (s <= 0.0) {
        // left edge of the support
        for (int j = 0; j < n; ++j)
            if (cum[j + 1] > 0.0) return grid.boundary(j);
        return grid.x_min;
    }
    if (s >= cum[n]) {
        for (int j = n; j > 0; --j)
            if (cum[j - 1] < cum[n]) return grid.boundary(j);
        return grid.x_max;
    }
    const int j = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), s) - cum.begin()) - 1;
    // cum[j] <= s < cum[j+1], cell j has positive mass
    const double frac = (s - cum[j]) / (cum[j + 1] - cum[j]);
    return grid.boundary(j) + frac * grid.h;
}

QuantileVector quantile(const Density& rho, int n_q) {
    const Grid1D& g = rho.grid();
    if (n_q == 0) n_q = default_n_q(g);
    if (n_q < g.n_cells)
        throw RangeError("quantile: n_q " + std::to_string(n_q) +
                         " must be at least n_cells " + std::to_string(g.n_cells));
    PiecewiseCdf cdf(rho);
    const double mass = cdf.mass();
    QuantileVector q;
    q.n_q = n_q;
    q.values.resize(n_q);
    // single forward sweep: levels are increasing
    int j = 0;
    for (int k = 0; k < n_q; ++k) {
        const double s = (k + 0.5) / n_q * mass;
        while (j + 1 < static_cast<int>(cdf.cum.size()) - 1 && cdf.cum[j + 1] <= s) ++j;
        const double lo = cdf.cum[j], hi = cdf.cum[j + 1];
        if (hi > lo) {
            const double frac = (s - lo) / (hi - lo);
            q.values[k] = g.boundary(j) + frac * g.h;
        } else {
            q.values[k] = g.boundary(j + 1);
        }
    }
    return q;
}

double w2(const Density& mu, const Density& nu, int n_q) {
    if (!(mu.grid() == nu.grid()))
        throw RangeError("w2: densities live on different grids");
    if (n_q == 0) n_q = default_n_q(mu.grid());
    const QuantileVector qa = quantile(mu, n_q);
    const QuantileVector qb = quantile(nu, n_q);
    double acc = 0.0;
    for (int k = 0; k < n_q; ++k) {
        const double d = qa.values[k] - qb.values[k];
        acc += d * d;
    }
    return std::sqrt(acc / n_q);
}

double product_w2_sq(const SpeciesPair& mu, const SpeciesPair& nu, int n_q) {
    const double a = w2(mu.rho1, nu.rho1, n_q);
    const double b = w2(mu.rho2, nu.rho2, n_q);
    return a * a + b * b;
}

std::vector<double> optimal_map(const Density& mu, const Density& nu) {
    const Grid1D& g = mu.grid();
    if (!(nu.grid() == g))
        throw RangeError("optimal_map: densities live on different grids");

    // connected support of mu: no vacuum cell strictly between positive cells
    int first = -1, last = -1;
    for (int j = 0; j < g.n_cells; ++j)
        if (mu[j] > 0.0) {
            if (first < 0) first = j;
            last = j;
        }
    for (int j = first; j <= last; ++j)
        if (mu[j] == 0.0)
            throw DegenerateSupport("optimal_map: vacuum cell " + std::to_string(j) +
                                    " inside the support of the source");

    PiecewiseCdf fmu(mu), fnu(nu);
    std::vector<double> T(g.n_cells);
    for (int j = 0; j < g.n_cells; ++j) {
        const double s = 0.5 * (fmu.cum[j] + fmu.cum[j + 1]); // F_mu at the cell center
        T[j] = fnu.quantile_at(s);
    }
    return T;
}

} // namespace crossdiff

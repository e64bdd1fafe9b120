#include "crossdiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace crossdiff {

Grid1D::Grid1D(double lo, double hi, int n) : x_min(lo), x_max(hi), n_cells(n) {
    if (!(hi > lo))
        throw RangeError("grid: x_max must exceed x_min");
    if (n < 8)
        throw RangeError("grid: n_cells must be at least 8, got " + std::to_string(n));
    h = (hi - lo) / n;
}

std::vector<double> Grid1D::centers() const {
    std::vector<double> xs(n_cells);
    for (int j = 0; j < n_cells; ++j) xs[j] = center(j);
    return xs;
}

Density::Density(Grid1D grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.n_cells)
        throw RangeError("density: value count does not match grid");
    double sum = 0.0;
    for (int j = 0; j < grid_.n_cells; ++j) {
        if (values_[j] < 0.0)
            throw NegativeEntry("density: negative cell value at index " + std::to_string(j));
        sum += values_[j];
    }
    const double mass = grid_.h * sum;
    if (std::abs(mass - 1.0) > kMassTol)
        throw ZeroMass("density: mass " + std::to_string(mass) + " is not 1 within tolerance");
}

double Density::mass() const {
    double sum = 0.0;
    for (double v : values_) sum += v;
    return grid_.h * sum;
}

SpeciesPair::SpeciesPair(Density a, Density b) : rho1(std::move(a)), rho2(std::move(b)) {
    if (!(rho1.grid() == rho2.grid()))
        throw RangeError("species pair: densities live on different grids");
}

Density normalize(const std::vector<double>& raw, const Grid1D& grid) {
    double sum = 0.0;
    for (std::size_t j = 0; j < raw.size(); ++j) {
        if (raw[j] < 0.0)
            throw NegativeEntry("normalize: negative entry at index " + std::to_string(j));
        sum += raw[j];
    }
    if (!(sum > 0.0))
        throw ZeroMass("normalize: total mass is zero");
    std::vector<double> v(raw.size());
    const double scale = 1.0 / (grid.h * sum);
    for (std::size_t j = 0; j < raw.size(); ++j) v[j] = raw[j] * scale;
    return Density(grid, std::move(v));
}

double second_moment(const Density& rho) {
    const Grid1D& g = rho.grid();
    double acc = 0.0;
    for (int j = 0; j < g.n_cells; ++j) {
        const double x = g.center(j);
        acc += x * x * rho[j];
    }
    return g.h * acc;
}

double entropy(const Density& rho) {
    double acc = 0.0;
    for (int j = 0; j < rho.size(); ++j) {
        const double v = rho[j];
        if (v > 0.0) acc += v * std::log(v);
    }
    return rho.grid().h * acc;
}

double entropy(const SpeciesPair& pair) { return entropy(pair.rho1) + entropy(pair.rho2); }

namespace {

// Piecewise-linear CDF evaluated at x (knots at cell boundaries).
double cdf_eval(const Grid1D& g, const std::vector<double>& cum, double x) {
    if (x <= g.x_min) return 0.0;
    if (x >= g.x_max) return cum.back();
    const int j = std::min(g.n_cells - 1, static_cast<int>((x - g.x_min) / g.h));
    const double b = g.boundary(j);
    const double frac = (x - b) / (g.boundary(j + 1) - b);
    return cum[j] + frac * (cum[j + 1] - cum[j]);
}

} // namespace

Density pushforward(const Density& rho, const std::vector<double>& map_at_centers) {
    const Grid1D& g = rho.grid();
    const int n = g.n_cells;
    if (static_cast<int>(map_at_centers.size()) != n)
        throw RangeError("pushforward: map sample count does not match grid");

    const double span = g.x_max - g.x_min;
    for (int j = 0; j + 1 < n; ++j) {
        if (map_at_centers[j + 1] < map_at_centers[j] - 1e-12 * span)
            throw NonMonotoneMap("pushforward: map decreases between cells " +
                                 std::to_string(j) + " and " + std::to_string(j + 1));
    }
    const auto [lo_it, hi_it] = std::minmax_element(map_at_centers.begin(), map_at_centers.end());
    if (*lo_it < g.x_min - 1e-12 * span || *hi_it > g.x_max + 1e-12 * span)
        throw ImageEscapesGrid("pushforward: image leaves the grid interval");

    // Cumulative mass at cell boundaries.
    std::vector<double> cum(n + 1, 0.0);
    for (int j = 0; j < n; ++j) cum[j + 1] = cum[j] + g.h * rho[j];
    const double mass = cum[n];

    // Extend T to the whole interval by constants beyond the outer centers,
    // then G(y) = F(sup{x : T(x) <= y}) at every output cell boundary.
    std::vector<double> tx(n + 2), ty(n + 2);
    tx[0] = g.x_min;
    ty[0] = map_at_centers[0];
    for (int j = 0; j < n; ++j) {
        tx[j + 1] = g.center(j);
        ty[j + 1] = std::max(map_at_centers[j], ty[j]); // clamp 1e-12-size dips
    }
    tx[n + 1] = g.x_max;
    ty[n + 1] = ty[n];

    std::vector<double> G(n + 1);
    G[0] = 0.0;
    G[n] = mass;
    int seg = 0;
    for (int k = 1; k < n; ++k) {
        const double y = g.boundary(k);
        if (y < ty[0]) {
            G[k] = 0.0;
            continue;
        }
        if (y >= ty[n + 1]) {
            G[k] = mass;
            continue;
        }
        while (seg + 1 < static_cast<int>(ty.size()) - 0 && ty[seg + 1] <= y) ++seg;
        // now ty[seg] <= y < ty[seg+1]; rightmost preimage on this segment
        double x_star;
        if (ty[seg + 1] > ty[seg]) {
            const double frac = (y - ty[seg]) / (ty[seg + 1] - ty[seg]);
            x_star = tx[seg] + frac * (tx[seg + 1] - tx[seg]);
        } else {
            x_star = tx[seg + 1];
        }
        G[k] = cdf_eval(g, cum, x_star);
        if (G[k] < G[k - 1]) G[k] = G[k - 1]; // guard rounding
    }

    std::vector<double> out(n);
    for (int j = 0; j < n; ++j) out[j] = (G[j + 1] - G[j]) / g.h;
    return Density(g, std::move(out));
}

double boundary_mass(const Density& rho, double margin) {
    const Grid1D& g = rho.grid();
    double acc = 0.0;
    for (int j = 0; j < g.n_cells; ++j) {
        const double x = g.center(j);
        if (x - g.x_min < margin || g.x_max - x < margin) acc += rho[j];
    }
    return g.h * acc;
}

double l1_distance(const Density& a, const Density& b) {
    if (!(a.grid() == b.grid()))
        throw RangeError("l1_distance: densities live on different grids");
    double acc = 0.0;
    for (int j = 0; j < a.size(); ++j) acc += std::abs(a[j] - b[j]);
    return a.grid().h * acc;
}

} // namespace crossdiff

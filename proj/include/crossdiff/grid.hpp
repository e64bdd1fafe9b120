#pragma once

#include <vector>

#include "crossdiff/errors.hpp"

namespace crossdiff {

// Tolerance against which unit mass is enforced on construction.
inline constexpr double kMassTol = 1e-12;

/// Uniform mesh of n_cells cells on the compact interval [x_min, x_max].
/// Cell j covers [x_min + j*h, x_min + (j+1)*h] with center x_min + (j+1/2)*h.
struct Grid1D {
    double x_min = 0.0;
    double x_max = 1.0;
    int n_cells = 0;
    double h = 0.0;

    Grid1D() = default;
    Grid1D(double lo, double hi, int n);

    double center(int j) const { return x_min + (j + 0.5) * h; }
    // Boundary j for j = 0..n_cells; the last one is pinned to x_max exactly.
    double boundary(int j) const { return j == n_cells ? x_max : x_min + j * h; }
    std::vector<double> centers() const;

    bool operator==(const Grid1D&) const = default;
};

/// Probability density given by nonnegative cell averages with unit mass,
/// h * sum(values) = 1 within kMassTol. Snapshots are immutable values.
class Density {
public:
    Density(Grid1D grid, std::vector<double> values);

    const Grid1D& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](int j) const { return values_[j]; }
    int size() const { return static_cast<int>(values_.size()); }
    double mass() const;

private:
    Grid1D grid_;
    std::vector<double> values_;
};

/// Two species sharing one grid.
struct SpeciesPair {
    Density rho1;
    Density rho2;

    SpeciesPair(Density a, Density b);
    const Grid1D& grid() const { return rho1.grid(); }
};

/// Scale a nonnegative vector of cell values to unit mass.
/// Throws NegativeEntry / ZeroMass.
Density normalize(const std::vector<double>& raw, const Grid1D& grid);

/// Second moment  int x^2 dmu  by the midpoint rule on cell centers.
double second_moment(const Density& rho);

/// Boltzmann entropy  int rho log rho  with the 0 log 0 = 0 convention.
double entropy(const Density& rho);
/// Pair entropy: sum of the per-species entropies.
double entropy(const SpeciesPair& pair);

/// Push-forward of rho under a nondecreasing map T sampled at cell centers.
/// The image measure is computed exactly through the piecewise-linear CDF
/// (mass of output cell j is F(T^{-1}(b_{j+1})) - F(T^{-1}(b_j))), so mass 1
/// is preserved by construction. Throws NonMonotoneMap / ImageEscapesGrid.
Density pushforward(const Density& rho, const std::vector<double>& map_at_centers);

/// Mass lying within distance `margin` from either end of the grid interval.
double boundary_mass(const Density& rho, double margin);

/// L1 distance  int |a - b| dx  of two densities on the same grid.
double l1_distance(const Density& a, const Density& b);

} // namespace crossdiff

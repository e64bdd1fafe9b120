#pragma once

#include "crossdiff/model.hpp"

namespace crossdiff::presets {

// --- diffusion families -----------------------------------------------------

/// A = a rho1^m1 + b rho2^m2 (no coupling), i.e. B = a eta1^2 + b eta2^2.
DiffusionSpec decoupled(double a, double b, double m1, double m2);

/// A = a rho1^m1 + b (rho1^{m1/2} + rho2^{m2/2})^2, a positive definite
/// quadratic form in the power variables. Certified constants assume m_i >= 2.
DiffusionSpec example1(double a, double b, double m1, double m2);

/// A = a rho1^2 + b rho2^2 + (rho1 + rho2)^3 (convex superlinear addition).
DiffusionSpec example2(double a, double b);

/// A = a rho1^m + b (rho1 + rho2)^2 with m in (1,2); the Hessian bound is
/// certified only on the bounded range 0 < rho1 <= R (stored in range1).
DiffusionSpec example3(double a, double b, double m, double R);

/// A = (rho1 + rho2)^2. Fails the Hessian lower bound in the direction
/// (1,-1); kept as the canonical negative audit case.
DiffusionSpec sum_square();

/// A identically zero (kernel-driven dynamics only).
DiffusionSpec zero_diffusion();

/// B given by a polynomial coefficient table in the power variables:
/// B = sum c_i eta1^{p_i} eta2^{q_i}. Declared constants are caller-supplied.
struct PolyTerm {
    double coeff;
    double p, q;

    bool operator==(const PolyTerm&) const = default;
};
DiffusionSpec polynomial_b(const std::string& name, const std::vector<PolyTerm>& terms,
                           double m1, double m2, double alpha1, double alpha2,
                           double coercivity, double lower_bound);

// --- kernels -----------------------------------------------------------------

PotentialSpec zero_kernel(KernelKind kind);

/// W(x) = (c/2) x^2, the standard confining self potential.
PotentialSpec quadratic_self(KernelKind kind, double c);

/// W(x) = amp (1 - exp(-x^2/sigma^2)). Vanishes at the origin; amp > 0 is
/// attractive, amp < 0 repulsive. Globally Lipschitz, so valid as a cross
/// kernel; even, so also valid as a self kernel.
PotentialSpec gaussian(KernelKind kind, double amp, double sigma);

/// W(x) = amp exp(-x^2/sigma^2); same dynamics as the offset form (gradients
/// agree) but W(0) = amp, which the audit records as informational.
PotentialSpec raw_gaussian(KernelKind kind, double amp, double sigma);

/// W(x) = |x|. The distributional Laplacian has an atom at the origin, so the
/// second-difference audit fails at shrinking scales; kept as the canonical
/// negative kernel case.
PotentialSpec abs_self(KernelKind kind);

// --- assembled models ---------------------------------------------------------

ModelSpec zero_model();

/// Decoupled quadratic diffusion, no kernels: each species follows the
/// porous-medium flow d/dt rho = a Lap(rho^2).
ModelSpec pme(double a = 1.0);

/// The full coupled configuration exercised by the acceptance runs:
/// example1 diffusion, quadratic self confinement for both species, and
/// non-symmetric attractive Gaussian cross kernels.
ModelSpec coupled_example1();

/// Zero diffusion with attractive Gaussian cross kernels (mean-motion tests).
ModelSpec attraction(double amp1, double sigma1, double amp2, double sigma2);

// --- initial data ---------------------------------------------------------------

/// Source solution of d/dt rho = Lap(rho^2) with unit mass (d = 1):
/// rho(x,t) = t^{-1/3} max(0, C - x^2 / (12 t^{2/3})), C = 3^{1/3}/4.
double barenblatt_value(double x, double t);
Density barenblatt(const Grid1D& grid, double t0);

Density gaussian_density(const Grid1D& grid, double center, double sigma);
Density uniform_density(const Grid1D& grid, double a, double b);
Density triangle_density(const Grid1D& grid, double center, double halfwidth);

} // namespace crossdiff::presets

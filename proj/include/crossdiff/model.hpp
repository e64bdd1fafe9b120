#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "crossdiff/grid.hpp"

namespace crossdiff {

// ---------------------------------------------------------------------------
// Diffusion part: A(rho1, rho2) = B(rho1^{m1/2}, rho2^{m2/2}) with B smooth,
// B(0,0) = 0, grad B(0,0) = 0. All evaluation goes through B in the power
// variables, so vacuum never meets a negative power.
// ---------------------------------------------------------------------------

using Fn2 = std::function<double(double, double)>;

struct DiffusionSpec {
    std::string name;
    double m1 = 2.0, m2 = 2.0;          // degenerate-diffusion exponents, > 1
    double alpha1 = 2.0, alpha2 = 2.0;  // declared growth exponents, in [m_i, 3 m_i)
    double coercivity = 0.0;            // declared C1 in the Hessian lower bound
    double lower_bound_const = 0.0;     // declared C in A >= C (rho1^m1 + rho2^m2)

    Fn2 B;                  // value in the power variables (eta1, eta2)
    Fn2 B1, B2;             // first partials
    Fn2 B11, B12, B22;      // second partials

    // Optional validity box for the certified constants (bounded-range
    // families certify their bounds on 0 < rho1 <= range1 etc.; 0 = unbounded).
    double range1 = 0.0, range2 = 0.0;

    double a_value(double r1, double r2) const;
    // dA/drho_i via the chain rule. For m_i < 2 the factor rho^{m_i/2-1} is
    // evaluated with a small floor so vacuum cells return a finite value; the
    // energy itself never uses the floor.
    double a_rho1(double r1, double r2) const;
    double a_rho2(double r1, double r2) const;
    // Hessian of A at a strictly positive point.
    void a_hessian(double r1, double r2, double& a11, double& a12, double& a22) const;
};

// ---------------------------------------------------------------------------
// Interaction kernels. Self kernels (H) must be even; cross kernels (K) must
// be globally Lipschitz with Lipschitz gradient. Declared constants are
// checked by audit_potential against sampled values.
// ---------------------------------------------------------------------------

enum class KernelKind { self1, self2, cross1, cross2 };

inline bool is_self(KernelKind k) {
    return k == KernelKind::self1 || k == KernelKind::self2;
}

using Fn1 = std::function<double(double)>;

struct PotentialSpec {
    std::string name;
    KernelKind kind = KernelKind::self1;
    bool zero = true; // fast path: identically vanishing kernel

    Fn1 value, grad;

    double lip_value = 0.0;      // declared sup |W'|
    double lip_grad = 0.0;       // declared sup |W''|
    double laplacian_bound = 0.0;// declared upper bound on W'' (signed)
    double grad_growth = 0.0;    // |W'(x)| <= grad_growth * (1 + |x|)
    double growth_upper = 0.0;   // W(x) <=  growth_upper * (1 + x^2)
    double growth_lower = 0.0;   // W(x) >= -growth_lower * (1 + |x|^growth_alpha)
    double growth_alpha = 1.0;   // in (0, 2)
};

struct ModelSpec {
    std::string name;
    DiffusionSpec diffusion;
    PotentialSpec H1, H2, K1, K2;

    // Sum of declared Laplacian bounds over the active kernels.
    double laplacian_bound_total() const;
    // Lip(K1)^2 + Lip(K2)^2, the constant of the strengthened dissipation
    // inequality produced by the weighted Young step.
    double cross_lipschitz_sq() const;
};

// ---------------------------------------------------------------------------
// Energies. All integrals use the midpoint rule on cell centers; the double
// sums are O(n^2) through the kernel tables (desk scale keeps n <= 2048).
// ---------------------------------------------------------------------------

/// int A(rho1, rho2) dx
double diffusion_energy(const SpeciesPair& pair, const DiffusionSpec& d);

/// (1/2) int (H * mu) dmu. Requires a self kind, else KindMismatch.
double self_energy(const Density& mu, const PotentialSpec& H);

/// int (K * nu) dmu with nu the frozen opposite species. Requires a cross kind.
double cross_energy(const Density& mu, const Density& nu, const PotentialSpec& K);

struct EnergySplit {
    double diffusion = 0.0;
    double self1 = 0.0, self2 = 0.0;
    double cross1 = 0.0, cross2 = 0.0;

    double f_tilde() const { return diffusion + self1 + self2; }
    double cross() const { return cross1 + cross2; }
    double total() const { return f_tilde() + cross(); }
};

/// Relative energy of a candidate pair against the frozen pair:
/// diffusion + self terms of the candidate, cross terms of the candidate
/// against the frozen opposite species.
EnergySplit relative_energy_split(const SpeciesPair& cand, const SpeciesPair& frozen,
                                  const ModelSpec& model);
double relative_energy(const SpeciesPair& cand, const SpeciesPair& frozen,
                       const ModelSpec& model);

/// Tabulated kernel at signed cell offsets (see kernels::tabulate).
std::vector<double> kernel_table(const Fn1& f, const Grid1D& grid);

// ---------------------------------------------------------------------------
// Audits. Every audit returns a structured report and never throws; entries
// marked informational do not affect the overall verdict.
// ---------------------------------------------------------------------------

struct AuditEntry {
    std::string name;
    bool pass = true;
    bool informational = false;
    double margin = 0.0; // worst signed margin, >= 0 means satisfied
    std::string witness; // human-readable location of the worst sample
    std::map<std::string, double> fitted;
};

struct AuditReport {
    std::string subject;
    std::vector<AuditEntry> entries;

    bool pass() const;
    const AuditEntry* find(const std::string& name) const;
};

struct SampleBox {
    double lo1 = 1e-3, hi1 = 10.0;
    double lo2 = 1e-3, hi2 = 10.0;
};

/// Checks on the diffusion density: exponents and normalization of B,
/// fitted growth exponents of the second-derivative terms against the
/// declared (alpha1, alpha2) budget, the Hessian lower bound with the
/// declared coercivity over a direction fan, and the fitted constant of
/// the pointwise lower bound A >= C (rho1^m1 + rho2^m2).
AuditReport audit_diffusion(const DiffusionSpec& d, const SampleBox& box, int n_samples);

/// Checks on one kernel: growth envelope, distributional Laplacian bound via
/// second difference quotients on shrinking scales, gradient growth and
/// evenness for self kinds, sampled Lipschitz constants for cross kinds.
/// The value at the origin is recorded as an informational entry.
AuditReport audit_potential(const PotentialSpec& w, double sample_radius, int n_samples);

/// Convenience: audit the diffusion part and all four kernels.
std::vector<AuditReport> audit_model(const ModelSpec& model, const SampleBox& box, int n_samples);

} // namespace crossdiff

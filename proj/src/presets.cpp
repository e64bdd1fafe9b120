#include "crossdiff/presets.hpp"

#include <cmath>
#include <utility>

#include "crossdiff/errors.hpp"

namespace crossdiff::presets {

namespace {

double safe_pow(double x, double e) {
    if (e == 0.0) return 1.0;
    if (x <= 0.0) return 0.0; // quadrant boundary; negative powers never reach here
    return std::pow(x, e);
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw RangeError(std::string(what) + " must be positive");
}

} // namespace

DiffusionSpec decoupled(double a, double b, double m1, double m2) {
    require_positive(a, "decoupled: a");
    require_positive(b, "decoupled: b");
    if (!(m1 > 1.0) || !(m2 > 1.0)) throw RangeError("decoupled: exponents must exceed 1");
    DiffusionSpec d;
    d.name = "decoupled";
    d.m1 = m1;
    d.m2 = m2;
    d.alpha1 = m1;
    d.alpha2 = m2;
    d.coercivity = std::min(a * m1 * (m1 - 1.0), b * m2 * (m2 - 1.0));
    d.lower_bound_const = std::min(a, b);
    d.B = [a, b](double e1, double e2) { return a * e1 * e1 + b * e2 * e2; };
    d.B1 = [a](double e1, double) { return 2.0 * a * e1; };
    d.B2 = [b](double, double e2) { return 2.0 * b * e2; };
    d.B11 = [a](double, double) { return 2.0 * a; };
    d.B12 = [](double, double) { return 0.0; };
    d.B22 = [b](double, double) { return 2.0 * b; };
    return d;
}

DiffusionSpec example1(double a, double b, double m1, double m2) {
    require_positive(a, "example1: a");
    require_positive(b, "example1: b");
    if (!(m1 >= 2.0) || !(m2 >= 2.0))
        throw RangeError("example1: certified constants need exponents >= 2");
    DiffusionSpec d;
    d.name = "example1";
    d.m1 = m1;
    d.m2 = m2;
    d.alpha1 = m1;
    d.alpha2 = m2;
    // Smallest eigenvalue of the constant Hessian of B, then the chain-rule
    // factor min(m_i/2)^2 from the power change of variables.
    const double lam = (a + 2.0 * b) - std::sqrt(a * a + 4.0 * b * b);
    d.coercivity = lam * std::min(m1 * m1, m2 * m2) / 4.0;
    d.lower_bound_const = b;
    d.B = [a, b](double e1, double e2) {
        const double s = e1 + e2;
        return a * e1 * e1 + b * s * s;
    };
    d.B1 = [a, b](double e1, double e2) { return 2.0 * a * e1 + 2.0 * b * (e1 + e2); };
    d.B2 = [b](double e1, double e2) { return 2.0 * b * (e1 + e2); };
    d.B11 = [a, b](double, double) { return 2.0 * a + 2.0 * b; };
    d.B12 = [b](double, double) { return 2.0 * b; };
    d.B22 = [b](double, double) { return 2.0 * b; };
    return d;
}

DiffusionSpec example2(double a, double b) {
    require_positive(a, "example2: a");
    require_positive(b, "example2: b");
    DiffusionSpec d;
    d.name = "example2";
    d.m1 = 2.0;
    d.m2 = 2.0;
    d.alpha1 = 3.0;
    d.alpha2 = 3.0;
    d.coercivity = std::min(2.0 * a, 2.0 * b);
    d.lower_bound_const = std::min(a, b);
    d.B = [a, b](double e1, double e2) {
        const double s = e1 + e2;
        return a * e1 * e1 + b * e2 * e2 + s * s * s;
    };
    d.B1 = [a](double e1, double e2) {
        const double s = e1 + e2;
        return 2.0 * a * e1 + 3.0 * s * s;
    };
    d.B2 = [b](double e1, double e2) {
        const double s = e1 + e2;
        return 2.0 * b * e2 + 3.0 * s * s;
    };
    d.B11 = [a](double e1, double e2) { return 2.0 * a + 6.0 * (e1 + e2); };
    d.B12 = [](double e1, double e2) { return 6.0 * (e1 + e2); };
    d.B22 = [b](double e1, double e2) { return 2.0 * b + 6.0 * (e1 + e2); };
    return d;
}

DiffusionSpec example3(double a, double b, double m, double R) {
    require_positive(a, "example3: a");
    require_positive(b, "example3: b");
    require_positive(R, "example3: R");
    if (!(m > 1.0) || !(m < 2.0)) throw RangeError("example3: m must lie in (1,2)");
    const double c1 = 0.95 * std::min(b, a * m * (m - 1.0) - 2.0 * b * std::pow(R, 2.0 - m));
    if (!(c1 > 0.0))
        throw RangeError("example3: no positive certified constant; decrease b or R");
    DiffusionSpec d;
    d.name = "example3";
    d.m1 = m;
    d.m2 = 2.0;
    d.alpha1 = 2.0;
    d.alpha2 = 2.0;
    d.coercivity = c1;
    d.lower_bound_const = std::min(a, b);
    d.range1 = R;
    const double r = 2.0 / m; // eta1^r recovers rho1
    d.B = [a, b, r](double e1, double e2) {
        const double s = safe_pow(e1, r) + e2;
        return a * e1 * e1 + b * s * s;
    };
    d.B1 = [a, b, r](double e1, double e2) {
        const double s = safe_pow(e1, r) + e2;
        return 2.0 * a * e1 + 2.0 * b * s * r * safe_pow(e1, r - 1.0);
    };
    d.B2 = [b, r](double e1, double e2) { return 2.0 * b * (safe_pow(e1, r) + e2); };
    d.B11 = [a, b, r](double e1, double e2) {
        const double s = safe_pow(e1, r) + e2;
        return 2.0 * a +
               2.0 * b * (r * r * safe_pow(e1, 2.0 * r - 2.0) +
                          s * r * (r - 1.0) * safe_pow(e1, r - 2.0));
    };
    d.B12 = [b, r](double e1, double) { return 2.0 * b * r * safe_pow(e1, r - 1.0); };
    d.B22 = [b](double, double) { return 2.0 * b; };
    return d;
}

DiffusionSpec sum_square() {
    DiffusionSpec d;
    d.name = "sum_square";
    d.m1 = 2.0;
    d.m2 = 2.0;
    d.alpha1 = 2.0;
    d.alpha2 = 2.0;
    // No positive constant works: the Hessian annihilates (1,-1). The declared
    // value exists so the audit has something concrete to refute.
    d.coercivity = 0.1;
    d.lower_bound_const = 1.0;
    d.B = [](double e1, double e2) {
        const double s = e1 + e2;
        return s * s;
    };
    d.B1 = [](double e1, double e2) { return 2.0 * (e1 + e2); };
    d.B2 = [](double e1, double e2) { return 2.0 * (e1 + e2); };
    d.B11 = [](double, double) { return 2.0; };
    d.B12 = [](double, double) { return 2.0; };
    d.B22 = [](double, double) { return 2.0; };
    return d;
}

DiffusionSpec zero_diffusion() {
    DiffusionSpec d;
    d.name = "zero";
    d.m1 = 2.0;
    d.m2 = 2.0;
    d.alpha1 = 2.0;
    d.alpha2 = 2.0;
    d.coercivity = 0.0;
    d.lower_bound_const = 0.0;
    auto zero2 = [](double, double) { return 0.0; };
    d.B = zero2;
    d.B1 = zero2;
    d.B2 = zero2;
    d.B11 = zero2;
    d.B12 = zero2;
    d.B22 = zero2;
    return d;
}

DiffusionSpec polynomial_b(const std::string& name, const std::vector<PolyTerm>& terms,
                           double m1, double m2, double alpha1, double alpha2,
                           double coercivity, double lower_bound) {
    if (!(m1 > 1.0) || !(m2 > 1.0)) throw RangeError("polynomial_b: exponents must exceed 1");
    for (const auto& t : terms)
        if (t.p < 0.0 || t.q < 0.0 || t.p + t.q < 2.0)
            throw RangeError("polynomial_b: term powers must be nonnegative with total >= 2");
    DiffusionSpec d;
    d.name = name;
    d.m1 = m1;
    d.m2 = m2;
    d.alpha1 = alpha1;
    d.alpha2 = alpha2;
    d.coercivity = coercivity;
    d.lower_bound_const = lower_bound;
    d.B = [terms](double e1, double e2) {
        double s = 0.0;
        for (const auto& t : terms) s += t.coeff * safe_pow(e1, t.p) * safe_pow(e2, t.q);
        return s;
    };
    d.B1 = [terms](double e1, double e2) {
        double s = 0.0;
        for (const auto& t : terms)
            if (t.p != 0.0) s += t.coeff * t.p * safe_pow(e1, t.p - 1.0) * safe_pow(e2, t.q);
        return s;
    };
    d.B2 = [terms](double e1, double e2) {
        double s = 0.0;
        for (const auto& t : terms)
            if (t.q != 0.0) s += t.coeff * t.q * safe_pow(e1, t.p) * safe_pow(e2, t.q - 1.0);
        return s;
    };
    d.B11 = [terms](double e1, double e2) {
        double s = 0.0;
        for (const auto& t : terms)
            if (t.p != 0.0 && t.p != 1.0)
                s += t.coeff * t.p * (t.p - 1.0) * safe_pow(e1, t.p - 2.0) * safe_pow(e2, t.q);
        return s;
    };
    d.B12 = [terms](double e1, double e2) {
        double s = 0.0;
        for (const auto& t : terms)
            if (t.p != 0.0 && t.q != 0.0)
                s += t.coeff * t.p * t.q * safe_pow(e1, t.p - 1.0) * safe_pow(e2, t.q - 1.0);
        return s;
    };
    d.B22 = [terms](double e1, double e2) {
        double s = 0.0;
        for (const auto& t : terms)
            if (t.q != 0.0 && t.q != 1.0)
                s += t.coeff * t.q * (t.q - 1.0) * safe_pow(e1, t.p) * safe_pow(e2, t.q - 2.0);
        return s;
    };
    return d;
}

PotentialSpec zero_kernel(KernelKind kind) {
    PotentialSpec w;
    w.name = "zero";
    w.kind = kind;
    w.zero = true;
    w.value = [](double) { return 0.0; };
    w.grad = [](double) { return 0.0; };
    return w;
}

PotentialSpec quadratic_self(KernelKind kind, double c) {
    if (!is_self(kind))
        throw KindMismatch("quadratic potential grows superlinearly; self kinds only");
    require_positive(c, "quadratic_self: c");
    PotentialSpec w;
    w.name = "quadratic";
    w.kind = kind;
    w.zero = false;
    w.value = [c](double x) { return 0.5 * c * x * x; };
    w.grad = [c](double x) { return c * x; };
    w.laplacian_bound = c;
    w.grad_growth = c;
    w.growth_upper = 0.5 * c;
    w.growth_lower = 0.0;
    w.growth_alpha = 1.0;
    return w;
}

namespace {

PotentialSpec gaussian_common(KernelKind kind, double amp, double sigma, bool offset) {
    require_positive(sigma, "gaussian: sigma");
    if (amp == 0.0) throw RangeError("gaussian: amp must be nonzero (use the zero kernel)");
    PotentialSpec w;
    w.name = offset ? "gaussian" : "raw_gaussian";
    w.kind = kind;
    w.zero = false;
    const double s2 = sigma * sigma;
    if (offset) {
        // expm1 keeps full precision near the origin, where 1 - exp(-t)
        // cancels catastrophically for small t.
        w.value = [amp, s2](double x) { return -amp * std::expm1(-x * x / s2); };
        w.grad = [amp, s2](double x) { return amp * (2.0 * x / s2) * std::exp(-x * x / s2); };
    } else {
        w.value = [amp, s2](double x) { return amp * std::exp(-x * x / s2); };
        w.grad = [amp, s2](double x) { return -amp * (2.0 * x / s2) * std::exp(-x * x / s2); };
    }
    const double aa = std::abs(amp);
    w.lip_value = (aa / sigma) * std::sqrt(2.0 / std::exp(1.0));
    w.lip_grad = 2.0 * aa / s2;
    // Signed sup of W''. The curvature at the origin is 2 amp / sigma^2 for the
    // offset form and -2 amp / sigma^2 for the raw form; the opposite-signed
    // extremum sits at x^2 = (3/2) sigma^2 with value 4 |amp| e^{-3/2} / sigma^2.
    const double at_zero = (offset ? amp : -amp) * 2.0 / s2;
    const double at_wings = 4.0 * aa * std::exp(-1.5) / s2;
    w.laplacian_bound = std::max(at_zero, at_wings);
    w.grad_growth = w.lip_value;
    w.growth_upper = std::max(amp, 0.0);
    w.growth_lower = std::max(-amp, 0.0);
    w.growth_alpha = 1.0;
    return w;
}

} // namespace

PotentialSpec gaussian(KernelKind kind, double amp, double sigma) {
    return gaussian_common(kind, amp, sigma, true);
}

PotentialSpec raw_gaussian(KernelKind kind, double amp, double sigma) {
    return gaussian_common(kind, amp, sigma, false);
}

PotentialSpec abs_self(KernelKind kind) {
    if (!is_self(kind)) throw KindMismatch("|x| has a kink at the origin; self kinds only");
    PotentialSpec w;
    w.name = "abs";
    w.kind = kind;
    w.zero = false;
    w.value = [](double x) { return std::abs(x); };
    w.grad = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
    w.lip_value = 1.0;
    w.lip_grad = 1.0;
    // The true distributional Laplacian carries an atom at the origin, so no
    // finite declaration can survive the shrinking-scale audit.
    w.laplacian_bound = 1.0;
    w.grad_growth = 1.0;
    w.growth_upper = 1.0;
    w.growth_lower = 0.0;
    w.growth_alpha = 1.0;
    return w;
}

ModelSpec zero_model() {
    ModelSpec m;
    m.name = "zero";
    m.diffusion = zero_diffusion();
    m.H1 = zero_kernel(KernelKind::self1);
    m.H2 = zero_kernel(KernelKind::self2);
    m.K1 = zero_kernel(KernelKind::cross1);
    m.K2 = zero_kernel(KernelKind::cross2);
    return m;
}

ModelSpec pme(double a) {
    ModelSpec m;
    m.name = "pme";
    m.diffusion = decoupled(a, a, 2.0, 2.0);
    m.H1 = zero_kernel(KernelKind::self1);
    m.H2 = zero_kernel(KernelKind::self2);
    m.K1 = zero_kernel(KernelKind::cross1);
    m.K2 = zero_kernel(KernelKind::cross2);
    return m;
}

ModelSpec coupled_example1() {
    ModelSpec m;
    m.name = "coupled_example1";
    m.diffusion = example1(0.5, 0.25, 2.0, 2.0);
    m.H1 = quadratic_self(KernelKind::self1, 1.0);
    m.H2 = quadratic_self(KernelKind::self2, 1.0);
    m.K1 = gaussian(KernelKind::cross1, 0.6, 0.8);
    m.K2 = gaussian(KernelKind::cross2, 0.4, 1.2);
    return m;
}

ModelSpec attraction(double amp1, double sigma1, double amp2, double sigma2) {
    ModelSpec m;
    m.name = "attraction";
    m.diffusion = zero_diffusion();
    m.H1 = zero_kernel(KernelKind::self1);
    m.H2 = zero_kernel(KernelKind::self2);
    m.K1 = gaussian(KernelKind::cross1, amp1, sigma1);
    m.K2 = gaussian(KernelKind::cross2, amp2, sigma2);
    return m;
}

double barenblatt_value(double x, double t) {
    if (!(t > 0.0)) throw RangeError("barenblatt: time must be positive");
    static const double C = std::cbrt(3.0) / 4.0;
    const double tp = std::cbrt(t);
    const double v = C - x * x / (12.0 * tp * tp);
    return v > 0.0 ? v / tp : 0.0;
}

Density barenblatt(const Grid1D& grid, double t0) {
    std::vector<double> v(static_cast<size_t>(grid.n_cells));
    for (int j = 0; j < grid.n_cells; ++j) v[static_cast<size_t>(j)] = barenblatt_value(grid.center(j), t0);
    return normalize(v, grid);
}

Density gaussian_density(const Grid1D& grid, double center, double sigma) {
    require_positive(sigma, "gaussian_density: sigma");
    std::vector<double> v(static_cast<size_t>(grid.n_cells));
    for (int j = 0; j < grid.n_cells; ++j) {
        const double u = (grid.center(j) - center) / sigma;
        v[static_cast<size_t>(j)] = std::exp(-0.5 * u * u);
    }
    return normalize(v, grid);
}

Density uniform_density(const Grid1D& grid, double a, double b) {
    if (!(b > a)) throw RangeError("uniform_density: empty interval");
    std::vector<double> v(static_cast<size_t>(grid.n_cells));
    for (int j = 0; j < grid.n_cells; ++j) {
        const double lo = std::max(a, grid.boundary(j));
        const double hi = std::min(b, grid.boundary(j + 1));
        v[static_cast<size_t>(j)] = std::max(0.0, hi - lo) / grid.h;
    }
    return normalize(v, grid);
}

Density triangle_density(const Grid1D& grid, double center, double halfwidth) {
    require_positive(halfwidth, "triangle_density: halfwidth");
    std::vector<double> v(static_cast<size_t>(grid.n_cells));
    for (int j = 0; j < grid.n_cells; ++j)
        v[static_cast<size_t>(j)] = std::max(0.0, 1.0 - std::abs(grid.center(j) - center) / halfwidth);
    return normalize(v, grid);
}

} // namespace crossdiff::presets

#include "crossdiff/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "crossdiff/kernels.hpp"

namespace crossdiff {

namespace {

// Floor applied to the density before chain-rule factors with negative
// exponents (m < 2), so gradients stay finite on vacuum cells and the
// exponent cancellation between B1 and the power factor survives at zero.
// Energies never use it.
constexpr double kPowFloor = 1e-12;

double floor_density(double r, double m) {
    return m < 2.0 ? std::max(r, kPowFloor) : r;
}

double chain_factor(double r, double m) {
    const double e = 0.5 * m - 1.0;
    if (e == 0.0) return 0.5 * m;
    return 0.5 * m * std::pow(r, e);
}

std::string point_witness(double x, double y) {
    std::ostringstream os;
    os << "(" << x << ", " << y << ")";
    return os.str();
}

} // namespace

double DiffusionSpec::a_value(double r1, double r2) const {
    return B(std::pow(r1, 0.5 * m1), std::pow(r2, 0.5 * m2));
}

double DiffusionSpec::a_rho1(double r1, double r2) const {
    const double r1f = floor_density(r1, m1);
    const double e1 = std::pow(r1f, 0.5 * m1), e2 = std::pow(r2, 0.5 * m2);
    return B1(e1, e2) * chain_factor(r1f, m1);
}

double DiffusionSpec::a_rho2(double r1, double r2) const {
    const double r2f = floor_density(r2, m2);
    const double e1 = std::pow(r1, 0.5 * m1), e2 = std::pow(r2f, 0.5 * m2);
    return B2(e1, e2) * chain_factor(r2f, m2);
}

void DiffusionSpec::a_hessian(double r1, double r2, double& a11, double& a12,
                              double& a22) const {
    const double e1 = std::pow(r1, 0.5 * m1), e2 = std::pow(r2, 0.5 * m2);
    const double d1 = 0.5 * m1 * std::pow(r1, 0.5 * m1 - 1.0);
    const double d2 = 0.5 * m2 * std::pow(r2, 0.5 * m2 - 1.0);
    const double dd1 = 0.5 * m1 * (0.5 * m1 - 1.0) * std::pow(r1, 0.5 * m1 - 2.0);
    const double dd2 = 0.5 * m2 * (0.5 * m2 - 1.0) * std::pow(r2, 0.5 * m2 - 2.0);
    a11 = B11(e1, e2) * d1 * d1 + B1(e1, e2) * dd1;
    a12 = B12(e1, e2) * d1 * d2;
    a22 = B22(e1, e2) * d2 * d2 + B2(e1, e2) * dd2;
}

double ModelSpec::laplacian_bound_total() const {
    double c = 0.0;
    for (const PotentialSpec* w : {&H1, &H2, &K1, &K2})
        if (!w->zero) c += w->laplacian_bound;
    return c;
}

double ModelSpec::cross_lipschitz_sq() const {
    double c = 0.0;
    for (const PotentialSpec* w : {&K1, &K2})
        if (!w->zero) c += w->lip_value * w->lip_value;
    return c;
}

double diffusion_energy(const SpeciesPair& pair, const DiffusionSpec& d) {
    const Grid1D& g = pair.grid();
    double acc = 0.0;
    for (int j = 0; j < g.n_cells; ++j)
        acc += d.B(std::pow(pair.rho1[j], 0.5 * d.m1), std::pow(pair.rho2[j], 0.5 * d.m2));
    return g.h * acc;
}

std::vector<double> kernel_table(const Fn1& f, const Grid1D& grid) {
    const int n = grid.n_cells;
    std::vector<double> table(2 * n - 1);
    for (int d = -(n - 1); d <= n - 1; ++d) table[d + n - 1] = f(d * grid.h);
    return table;
}

double self_energy(const Density& mu, const PotentialSpec& H) {
    if (!is_self(H.kind))
        throw KindMismatch("self_energy: kernel '" + H.name + "' is not a self kind");
    if (H.zero) return 0.0;
    const Grid1D& g = mu.grid();
    const std::vector<double> table = kernel_table(H.value, g);
    const double s = kernels::pair_sum(table, mu.values(), mu.values());
    return 0.5 * g.h * g.h * s;
}

double cross_energy(const Density& mu, const Density& nu, const PotentialSpec& K) {
    if (is_self(K.kind))
        throw KindMismatch("cross_energy: kernel '" + K.name + "' is not a cross kind");
    if (K.zero) return 0.0;
    if (!(mu.grid() == nu.grid()))
        throw RangeError("cross_energy: densities live on different grids");
    const Grid1D& g = mu.grid();
    const std::vector<double> table = kernel_table(K.value, g);
    const double s = kernels::pair_sum(table, mu.values(), nu.values());
    return g.h * g.h * s;
}

EnergySplit relative_energy_split(const SpeciesPair& cand, const SpeciesPair& frozen,
                                  const ModelSpec& model) {
    EnergySplit e;
    e.diffusion = diffusion_energy(cand, model.diffusion);
    e.self1 = self_energy(cand.rho1, model.H1);
    e.self2 = self_energy(cand.rho2, model.H2);
    e.cross1 = cross_energy(cand.rho1, frozen.rho2, model.K1);
    e.cross2 = cross_energy(cand.rho2, frozen.rho1, model.K2);
    return e;
}

double relative_energy(const SpeciesPair& cand, const SpeciesPair& frozen,
                       const ModelSpec& model) {
    return relative_energy_split(cand, frozen, model).total();
}

// ---------------------------------------------------------------------------
// Audits
// ---------------------------------------------------------------------------

bool AuditReport::pass() const {
    for (const AuditEntry& e : entries)
        if (!e.informational && !e.pass) return false;
    return true;
}

const AuditEntry* AuditReport::find(const std::string& name) const {
    for (const AuditEntry& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

namespace {

// Least-squares fit of log|T| ~ c + a log(eta1) + b log(eta2) along rays in
// the positive quadrant; returns false if the term vanishes on all samples.
bool fit_growth_exponents(const Fn2& term, double& a, double& b) {
    // normal equations for the 3-parameter fit
    double S[3][3] = {{0}}, r[3] = {0};
    int used = 0;
    for (int ti = 0; ti < 8; ++ti) {
        const double theta = 0.15 + (std::numbers::pi / 2 - 0.3) * ti / 7.0;
        for (int si = 0; si < 12; ++si) {
            const double t = 10.0 * std::pow(100.0, si / 11.0); // 10 .. 1000
            const double e1 = t * std::cos(theta), e2 = t * std::sin(theta);
            const double v = std::abs(term(e1, e2));
            if (v < 1e-14) continue;
            const double row[3] = {1.0, std::log(e1), std::log(e2)};
            const double y = std::log(v);
            for (int p = 0; p < 3; ++p) {
                for (int q = 0; q < 3; ++q) S[p][q] += row[p] * row[q];
                r[p] += row[p] * y;
            }
            ++used;
        }
    }
    if (used < 12) return false;
    // solve the 3x3 system by Gaussian elimination with partial pivoting
    double M[3][4];
    for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < 3; ++q) M[p][q] = S[p][q];
        M[p][3] = r[p];
    }
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int p = c + 1; p < 3; ++p)
            if (std::abs(M[p][c]) > std::abs(M[piv][c])) piv = p;
        std::swap(M[c], M[piv]);
        if (std::abs(M[c][c]) < 1e-30) return false;
        for (int p = c + 1; p < 3; ++p) {
            const double f = M[p][c] / M[c][c];
            for (int q = c; q < 4; ++q) M[p][q] -= f * M[c][q];
        }
    }
    double x[3];
    for (int p = 2; p >= 0; --p) {
        double acc = M[p][3];
        for (int q = p + 1; q < 3; ++q) acc -= M[p][q] * x[q];
        x[p] = acc / M[p][p];
    }
    a = x[1];
    b = x[2];
    return true;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, n == 1 ? 0.0 : double(i) / (n - 1));
    return v;
}

} // namespace

AuditReport audit_diffusion(const DiffusionSpec& d, const SampleBox& box, int n_samples) {
    AuditReport rep;
    rep.subject = "diffusion:" + d.name;

    // exponent ranges
    {
        AuditEntry e;
        e.name = "exponents";
        const double margins[] = {d.m1 - 1.0, d.m2 - 1.0, d.alpha1 - d.m1,
                                  3.0 * d.m1 - d.alpha1, d.alpha2 - d.m2,
                                  3.0 * d.m2 - d.alpha2};
        e.margin = *std::min_element(std::begin(margins), std::end(margins));
        // m > 1 and alpha < 3m are strict; alpha >= m is attained by most
        // families, so equality there is fine.
        e.pass = d.m1 > 1.0 && d.m2 > 1.0 && d.alpha1 >= d.m1 && d.alpha1 < 3.0 * d.m1 &&
                 d.alpha2 >= d.m2 && d.alpha2 < 3.0 * d.m2;
        e.fitted = {{"m1", d.m1}, {"m2", d.m2}, {"alpha1", d.alpha1}, {"alpha2", d.alpha2}};
        rep.entries.push_back(std::move(e));
    }

    // normalization of B at the vacuum corner
    {
        AuditEntry e;
        e.name = "normalization";
        const double v0 = std::abs(d.B(0.0, 0.0));
        const double g0 = std::max(std::abs(d.B1(0.0, 0.0)), std::abs(d.B2(0.0, 0.0)));
        e.margin = 1e-12 - std::max(v0, g0);
        e.pass = e.margin >= 0.0;
        e.fitted = {{"value_at_origin", v0}, {"grad_at_origin", g0}};
        rep.entries.push_back(std::move(e));
    }

    // growth of the second-derivative terms along rays
    {
        struct Term {
            const char* tag;
            Fn2 fn;
        };
        const Term terms[] = {
            {"t11", [&](double e1, double e2) { return e1 * e1 * d.B11(e1, e2); }},
            {"t22", [&](double e1, double e2) { return e2 * e2 * d.B22(e1, e2); }},
            {"t12", [&](double e1, double e2) { return e1 * e2 * d.B12(e1, e2); }},
        };
        AuditEntry e;
        e.name = "growth";
        e.margin = 1.0;
        for (const Term& t : terms) {
            double a = 0.0, b = 0.0;
            if (!fit_growth_exponents(t.fn, a, b)) {
                e.fitted[std::string(t.tag) + "_a"] = 0.0;
                e.fitted[std::string(t.tag) + "_b"] = 0.0;
                e.fitted[std::string(t.tag) + "_budget"] = 0.0;
                continue;
            }
            const double budget = a * d.m1 / (2.0 * d.alpha1) + b * d.m2 / (2.0 * d.alpha2);
            e.fitted[std::string(t.tag) + "_a"] = a;
            e.fitted[std::string(t.tag) + "_b"] = b;
            e.fitted[std::string(t.tag) + "_budget"] = budget;
            const double margin = 1.0 + 0.05 - budget; // small fit allowance
            if (margin < e.margin) {
                e.margin = margin;
                e.witness = t.tag;
            }
        }
        e.pass = e.margin >= 0.0;
        rep.entries.push_back(std::move(e));
    }

    // Hessian lower bound over a sampled box and a direction fan
    {
        AuditEntry e;
        e.name = "coercivity";
        const int side = std::max(4, static_cast<int>(std::sqrt(double(n_samples))));
        double hi1 = box.hi1, hi2 = box.hi2;
        if (d.range1 > 0.0) hi1 = std::min(hi1, d.range1);
        if (d.range2 > 0.0) hi2 = std::min(hi2, d.range2);
        const std::vector<double> xs = log_spaced(box.lo1, hi1, side);
        const std::vector<double> ys = log_spaced(box.lo2, hi2, side);
        double worst = std::numeric_limits<double>::infinity();
        double certifiable = std::numeric_limits<double>::infinity();
        for (double x : xs)
            for (double y : ys) {
                double a11, a12, a22;
                d.a_hessian(x, y, a11, a12, a22);
                const double w1 = std::pow(x, d.m1 - 2.0), w2p = std::pow(y, d.m2 - 2.0);
                for (int k = 0; k < 32; ++k) {
                    const double th = std::numbers::pi * (k + 0.5) / 32.0;
                    const double v1 = std::cos(th), v2 = std::sin(th);
                    const double lhs = a11 * v1 * v1 + 2.0 * a12 * v1 * v2 + a22 * v2 * v2;
                    const double rhs = w1 * v1 * v1 + w2p * v2 * v2;
                    const double margin = lhs - d.coercivity * rhs;
                    if (margin < worst) {
                        worst = margin;
                        e.witness = point_witness(x, y);
                    }
                    certifiable = std::min(certifiable, lhs / rhs);
                }
            }
        e.margin = worst;
        e.pass = worst >= -1e-9 * (1.0 + std::abs(d.coercivity));
        e.fitted = {{"declared_c1", d.coercivity}, {"max_certifiable_c1", certifiable}};
        rep.entries.push_back(std::move(e));
    }

    // pointwise lower bound A >= C (rho1^m1 + rho2^m2)
    {
        AuditEntry e;
        e.name = "lower_bound";
        const int side = std::max(4, static_cast<int>(std::sqrt(double(n_samples))));
        double hi1 = box.hi1, hi2 = box.hi2;
        if (d.range1 > 0.0) hi1 = std::min(hi1, d.range1);
        if (d.range2 > 0.0) hi2 = std::min(hi2, d.range2);
        const std::vector<double> xs = log_spaced(box.lo1, hi1, side);
        const std::vector<double> ys = log_spaced(box.lo2, hi2, side);
        double fitted = std::numeric_limits<double>::infinity();
        for (double x : xs)
            for (double y : ys) {
                const double denom = std::pow(x, d.m1) + std::pow(y, d.m2);
                const double ratio = d.a_value(x, y) / denom;
                if (ratio < fitted) {
                    fitted = ratio;
                    e.witness = point_witness(x, y);
                }
            }
        e.fitted = {{"declared", d.lower_bound_const}, {"fitted", fitted}};
        e.margin = fitted - d.lower_bound_const;
        e.pass = e.margin >= -1e-12;
        rep.entries.push_back(std::move(e));
    }

    return rep;
}

AuditReport audit_potential(const PotentialSpec& w, double sample_radius, int n_samples) {
    AuditReport rep;
    rep.subject = "kernel:" + w.name;
    if (w.zero) {
        AuditEntry e;
        e.name = "zero_kernel";
        e.pass = true;
        rep.entries.push_back(std::move(e));
        return rep;
    }

    const int n = std::max(64, n_samples);
    std::vector<double> xs(n + 1);
    for (int i = 0; i <= n; ++i) xs[i] = -sample_radius + 2.0 * sample_radius * i / n;

    // growth envelope of the value
    {
        AuditEntry e;
        e.name = "growth_envelope";
        double worst = std::numeric_limits<double>::infinity();
        double fit_up = 0.0, fit_lo = 0.0;
        for (double x : xs) {
            const double v = w.value(x);
            const double up = w.growth_upper * (1.0 + x * x) - v;
            const double lo = v + w.growth_lower * (1.0 + std::pow(std::abs(x), w.growth_alpha));
            const double m = std::min(up, lo);
            if (m < worst) {
                worst = m;
                e.witness = point_witness(x, v);
            }
            fit_up = std::max(fit_up, v / (1.0 + x * x));
            fit_lo = std::max(fit_lo, -v / (1.0 + std::pow(std::abs(x), w.growth_alpha)));
        }
        e.margin = worst;
        e.pass = worst >= -1e-12;
        e.fitted = {{"fitted_upper", fit_up}, {"fitted_lower", fit_lo}};
        rep.entries.push_back(std::move(e));
    }

    // distributional Laplacian bound: the centered second difference quotient
    // of any W with Delta W <= C is itself <= C at every scale
    {
        AuditEntry e;
        e.name = "laplacian_bound";
        const double deltas[] = {1e-1, 1e-2, 1e-3, 1e-4};
        double worst_q = -std::numeric_limits<double>::infinity();
        double worst_excess = -std::numeric_limits<double>::infinity();
        for (double delta : deltas)
            for (double x : xs) {
                const double vp = w.value(x + delta), v0 = w.value(x), vm = w.value(x - delta);
                const double q = (vp - 2.0 * v0 + vm) / (delta * delta);
                // Cancellation allowance: the numerator loses up to a few ulp
                // of the summand magnitudes, which the division blows up by
                // 1/delta^2. A genuine atom in the Laplacian grows like
                // 1/delta and dwarfs this at every sampled scale.
                const double fp = 8.0 * std::numeric_limits<double>::epsilon() *
                                  (std::abs(vp) + 2.0 * std::abs(v0) + std::abs(vm)) /
                                  (delta * delta);
                worst_q = std::max(worst_q, q);
                const double excess = q - w.laplacian_bound - fp;
                if (excess > worst_excess) {
                    worst_excess = excess;
                    e.witness = point_witness(x, delta);
                }
            }
        e.margin = 1e-9 * (1.0 + std::abs(w.laplacian_bound)) - worst_excess;
        e.pass = e.margin >= 0.0;
        e.fitted = {{"declared", w.laplacian_bound}, {"worst_quotient", worst_q}};
        rep.entries.push_back(std::move(e));
    }

    if (is_self(w.kind)) {
        // |W'(x)| <= C (1 + |x|)
        {
            AuditEntry e;
            e.name = "gradient_growth";
            double fitted = 0.0;
            double x_at = 0.0;
            for (double x : xs) {
                const double r = std::abs(w.grad(x)) / (1.0 + std::abs(x));
                if (r > fitted) {
                    fitted = r;
                    x_at = x;
                }
            }
            e.margin = w.grad_growth * (1.0 + 1e-9) - fitted;
            e.pass = e.margin >= 0.0;
            e.witness = point_witness(x_at, w.grad(x_at));
            e.fitted = {{"declared", w.grad_growth}, {"fitted", fitted}};
            rep.entries.push_back(std::move(e));
        }
        // evenness
        {
            AuditEntry e;
            e.name = "evenness";
            double worst = 0.0;
            for (double x : xs) worst = std::max(worst, std::abs(w.value(x) - w.value(-x)));
            e.margin = 1e-12 - worst;
            e.pass = e.margin >= 0.0;
            e.fitted = {{"max_asymmetry", worst}};
            rep.entries.push_back(std::move(e));
        }
    } else {
        // global Lipschitz bounds of the value and the gradient
        {
            AuditEntry e;
            e.name = "lipschitz";
            double fitted = 0.0, x_at = 0.0;
            for (double x : xs) {
                const double g = std::abs(w.grad(x));
                if (g > fitted) {
                    fitted = g;
                    x_at = x;
                }
            }
            e.margin = w.lip_value * (1.0 + 1e-9) - fitted;
            e.pass = e.margin >= 0.0;
            e.witness = point_witness(x_at, fitted);
            e.fitted = {{"declared", w.lip_value}, {"fitted", fitted}};
            rep.entries.push_back(std::move(e));
        }
        {
            AuditEntry e;
            e.name = "lipschitz_grad";
            double fitted = 0.0;
            for (int i = 0; i + 1 <= n; ++i) {
                const double d = std::abs(w.grad(xs[i + 1]) - w.grad(xs[i])) / (xs[i + 1] - xs[i]);
                fitted = std::max(fitted, d);
            }
            e.margin = w.lip_grad * (1.0 + 1e-9) - fitted;
            e.pass = e.margin >= 0.0;
            e.fitted = {{"declared", w.lip_grad}, {"fitted", fitted}};
            rep.entries.push_back(std::move(e));
        }
    }

    // normalization at the origin; informational because constant offsets do
    // not change the induced dynamics
    {
        AuditEntry e;
        e.name = "zero_value";
        e.informational = true;
        const double v0 = w.value(0.0);
        e.margin = 1e-10 - std::abs(v0);
        e.pass = e.margin >= 0.0;
        e.fitted = {{"value_at_origin", v0}};
        rep.entries.push_back(std::move(e));
    }

    return rep;
}

std::vector<AuditReport> audit_model(const ModelSpec& model, const SampleBox& box,
                                     int n_samples) {
    std::vector<AuditReport> reports;
    reports.push_back(audit_diffusion(model.diffusion, box, n_samples));
    for (const PotentialSpec* w : {&model.H1, &model.H2, &model.K1, &model.K2})
        reports.push_back(audit_potential(*w, 8.0, std::max(n_samples, 4096)));
    return reports;
}

} // namespace crossdiff

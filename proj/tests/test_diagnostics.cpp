#include <cmath>
#include <vector>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crossdiff/diagnostics.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/kernels.hpp"
#include "crossdiff/presets.hpp"

using namespace crossdiff;
using namespace crossdiff::presets;

namespace {

// Shared trajectories, built once per binary. The spreading porous-medium run
// starts from box data: the sharp fronts give the path a genuine square-root
// transient in time, the regime the continuity estimate is about. The coupled
// run has every energy term active on a short window.
const Trajectory& pme_fine() {
    static const Trajectory t = [] {
        Grid1D g(-2.0, 2.0, 512);
        SpeciesPair init{uniform_density(g, -0.15, 0.15), uniform_density(g, -0.15, 0.15)};
        JkoConfig cfg;
        cfg.tau = 1e-3;
        return run_scheme(init, pme(), cfg, 0.3);
    }();
    return t;
}

const Trajectory& coupled_run() {
    static const Trajectory t = [] {
        Grid1D g(-3.0, 3.0, 96);
        SpeciesPair init{gaussian_density(g, -0.8, 0.35), gaussian_density(g, 0.6, 0.3)};
        JkoConfig cfg;
        cfg.tau = 2e-3;
        return run_scheme(init, coupled_example1(), cfg, 0.05);
    }();
    return t;
}

double power_sum(const Density& rho, double m) {
    double acc = 0.0;
    for (int j = 0; j < rho.size(); ++j) acc += std::pow(rho[j], m);
    return rho.grid().h * acc;
}

} // namespace

TEST_CASE("bump test functions match finite differences") {
    for (TestFunction::Kind kind : {TestFunction::Kind::bump, TestFunction::Kind::poly_bump}) {
        TestFunction f;
        f.center = 0.2;
        f.width = 0.55;
        f.kind = kind;
        // points kept away from the support edge, where the higher derivatives
        // blow up and finite differences of any fixed order lose accuracy
        for (double u : {-0.6, -0.35, -0.1, 0.0, 0.25, 0.5}) {
            const double x = f.center + u * f.width;
            const double dg = 1e-6;
            const double fd_grad = (f.value(x + dg) - f.value(x - dg)) / (2.0 * dg);
            CHECK(f.grad(x) == doctest::Approx(fd_grad).epsilon(1e-6).scale(1.0));
            const double dl = 1e-4;
            const double fd_lap =
                (f.value(x + dl) - 2.0 * f.value(x) + f.value(x - dl)) / (dl * dl);
            CHECK(f.laplacian(x) == doctest::Approx(fd_lap).epsilon(1e-6).scale(1.0));
        }
        // compact support: identically zero beyond the width
        CHECK(f.value(f.center + 1.01 * f.width) == 0.0);
        CHECK(f.grad(f.center - 1.5 * f.width) == 0.0);
    }
}

TEST_CASE("implicit heat flow conserves mass, stays positive, dissipates exactly") {
    Grid1D g(-1.0, 1.0, 64);
    const Density rho = triangle_density(g, 0.3, 0.4); // has a vacuum region
    const double s = 2e-5;

    std::vector<double> u1 = heat_implicit(rho.values(), g.h, s, 1);
    double sum0 = 0.0, sum1 = 0.0;
    for (int j = 0; j < g.n_cells; ++j) {
        sum0 += rho[j];
        sum1 += u1[j];
        CHECK(u1[j] > 0.0);
    }
    CHECK(sum1 == doctest::Approx(sum0).epsilon(1e-13));

    // One backward step satisfies an exact energy identity: expanding
    // u0 = u1 - s L u1 in the squared sums gives
    //   int u0^2 - int u1^2 = 2 s int |grad u1|^2 + s^2 int (L u1)^2
    // with the face gradients and the reflecting-wall Laplacian.
    double faces = 0.0;
    for (int j = 0; j + 1 < g.n_cells; ++j) {
        const double dv = (u1[j + 1] - u1[j]) / g.h;
        faces += dv * dv;
    }
    double lap2 = 0.0;
    for (int j = 0; j < g.n_cells; ++j) {
        const double left = (j > 0) ? u1[j - 1] : u1[j];
        const double right = (j + 1 < g.n_cells) ? u1[j + 1] : u1[j];
        const double lu = (left - 2.0 * u1[j] + right) / (g.h * g.h);
        lap2 += lu * lu;
    }
    double sq0 = 0.0, sq1 = 0.0;
    for (int j = 0; j < g.n_cells; ++j) {
        sq0 += rho[j] * rho[j];
        sq1 += u1[j] * u1[j];
    }
    const double drop = g.h * (sq0 - sq1);
    const double rhs = 2.0 * s * g.h * faces + s * s * g.h * lap2;
    CHECK(drop == doctest::Approx(rhs).epsilon(1e-12));

    CHECK_THROWS_AS(heat_implicit(rho.values(), 0.0, s, 1), RangeError);
    CHECK_THROWS_AS(heat_implicit(rho.values(), g.h, -1.0, 1), RangeError);
    CHECK_THROWS_AS(heat_implicit(rho.values(), g.h, s, 0), RangeError);
}

TEST_CASE("stationary zero-model run passes every diagnostic") {
    Grid1D g(-1.0, 1.0, 64);
    SpeciesPair init{gaussian_density(g, -0.2, 0.1), gaussian_density(g, 0.25, 0.12)};
    JkoConfig cfg;
    cfg.tau = 1e-3;
    const Trajectory traj = run_scheme(init, zero_model(), cfg, 0.012);

    DiagnosticsConfig dcfg;
    const DiagnosticsReport report = run_diagnostics(traj, zero_model(), dcfg);
    CHECK(report.all_pass());

    const DiagnosticEntry* holder = report.find("holder_continuity");
    REQUIRE(holder != nullptr);
    CHECK(holder->informational); // no distances to fit on a constant path

    const DiagnosticEntry* norm = report.find("growth_norm_bound");
    REQUIRE(norm != nullptr);
    CHECK(norm->informational); // zero diffusion certifies no lower bound

    for (const char* name : {"weak_residual_rho1", "weak_residual_rho2"}) {
        const DiagnosticEntry* w = report.find(name);
        REQUIRE(w != nullptr);
        CHECK(w->fitted.at("residual") <= 1e-10);
    }
}

TEST_CASE("porous-medium spreading satisfies the path estimates") {
    const Trajectory& traj = pme_fine();
    const ModelSpec model = pme();

    const DiagnosticEntry one = check_one_step(traj, 1e-9);
    CHECK(one.pass);

    const DiagnosticEntry diss = check_dissipation(traj, model, 1e-9);
    CHECK(diss.pass);

    const DiagnosticEntry mom = check_moments(traj);
    CHECK(mom.pass);
    CHECK(mom.fitted.at("envelope_rate") > 0.0); // the support really spreads

    const DiagnosticEntry hold = check_holder(traj, 64);
    CHECK(hold.pass);
    CHECK(hold.fitted.at("slope") >= 0.45);
    CHECK(hold.fitted.at("slope") <= 1.1);

    // reruns are bit-identical
    const DiagnosticEntry hold2 = check_holder(traj, 64);
    CHECK(hold.slack == hold2.slack);
    CHECK(hold.fitted.at("slope") == hold2.fitted.at("slope"));
    CHECK(hold.fitted.at("c") == hold2.fitted.at("c"));

    const DiagnosticEntry norm = check_norm_bounds(traj, model);
    CHECK(norm.pass);
    CHECK_FALSE(norm.informational);

    // with no kernels the diffusion energy is a Lyapunov functional, so the
    // power sums must come down monotonically (cell averaging allowed for)
    double prev = power_sum(traj.states.front().rho1, 2.0) +
                  power_sum(traj.states.front().rho2, 2.0);
    for (const SpeciesPair& st : traj.states) {
        const double cur = power_sum(st.rho1, 2.0) + power_sum(st.rho2, 2.0);
        CHECK(cur <= prev + 1e-7);
        prev = cur;
    }

    const DiagnosticEntry ent = check_entropy_bounds(traj, model);
    CHECK(ent.pass);
}

TEST_CASE("entropy envelope calibrated on one run holds on a fresh one") {
    const DiagnosticEntry ent = check_entropy_bounds(pme_fine(), pme());
    const double c_fit = ent.fitted.at("fitted_c");

    Grid1D g(-2.0, 2.0, 256);
    SpeciesPair init{barenblatt(g, 0.15), barenblatt(g, 0.15)};
    JkoConfig cfg;
    cfg.tau = 2e-3;
    const Trajectory fresh = run_scheme(init, pme(), cfg, 0.1);
    for (const SpeciesPair& st : fresh.states) {
        const double m2 = second_moment(st.rho1) + second_moment(st.rho2);
        CHECK(entropy(st) >= -1.5 * c_fit * std::pow(m2 + 1.0, 0.75) - 1e-9);
    }
}

TEST_CASE("flow interchange holds on the coupled model") {
    const Trajectory& traj = coupled_run();
    DiagnosticsConfig dcfg;
    const DiagnosticEntry fi = check_flow_interchange(traj, coupled_example1(), dcfg);
    CHECK(fi.pass);
    CHECK(fi.fitted.at("worst_coercivity_gap") <= 0.0);
    CHECK(fi.fitted.at("worst_evi_gap") <= 0.0);
    CHECK(fi.fitted.at("accumulated_gradient") <= fi.fitted.at("accumulated_bound") + 1e-3);
    CHECK(fi.fitted.at("accumulated_gradient") > 0.0);
}

TEST_CASE("uniform and peaked states bracket the entropy bounds") {
    Grid1D g(0.0, 1.0, 64);
    // value 1 everywhere: entropy 0, power sums 1 + 1
    Trajectory uniform;
    uniform.grid = g;
    uniform.tau = 1e-3;
    uniform.states.push_back({uniform_density(g, 0.0, 1.0), uniform_density(g, 0.0, 1.0)});
    const DiagnosticEntry flat = check_entropy_bounds(uniform, pme());
    CHECK(flat.pass);
    CHECK(flat.fitted.at("entropy_min") == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));

    // value 4 on a quarter interval: entropy = log 4, power sum = 4 each
    Trajectory peaked;
    peaked.grid = g;
    peaked.tau = 1e-3;
    peaked.states.push_back({uniform_density(g, 0.25, 0.5), uniform_density(g, 0.25, 0.5)});
    const DiagnosticEntry sharp = check_entropy_bounds(peaked, pme());
    CHECK(sharp.pass);
    CHECK(sharp.fitted.at("entropy_min") == doctest::Approx(std::log(4.0) * 2.0));
    CHECK(sharp.slack < -1.0); // x log x sits well below x^2 here
}

TEST_CASE("weak residual vanishes on a stationary run and drops under refinement") {
    Grid1D g(-1.0, 1.0, 64);
    SpeciesPair init{gaussian_density(g, -0.2, 0.1), gaussian_density(g, 0.25, 0.12)};
    JkoConfig cfg;
    cfg.tau = 1e-3;
    const Trajectory still = run_scheme(init, zero_model(), cfg, 0.005);

    TestFunction phi;
    phi.center = 0.0;
    phi.width = 0.5;
    CHECK(weak_residual(still, zero_model(), phi, 1, 0, 5) <= 1e-10);
    CHECK(weak_residual(still, zero_model(), phi, 2, 0, 5) <= 1e-10);

    CHECK_THROWS_AS(weak_residual(still, zero_model(), phi, 3, 0, 5), RangeError);
    CHECK_THROWS_AS(weak_residual(still, zero_model(), phi, 1, 2, 2), UnsupportedWindow);
    CHECK_THROWS_AS(weak_residual(still, zero_model(), phi, 1, 0, 99), UnsupportedWindow);
    TestFunction wide;
    wide.center = 0.0;
    wide.width = 1.2;
    CHECK_THROWS_AS(weak_residual(still, zero_model(), wide, 1, 0, 5), UnsupportedWindow);

    // refinement study: halving (h, tau) together must shrink the residual
    // noticeably. Smooth initial data here, so the first-order rate is not
    // masked by the corner layer box data drags along.
    auto spreading = [](int n, double tau) {
        Grid1D gr(-2.0, 2.0, n);
        SpeciesPair start{barenblatt(gr, 0.1), barenblatt(gr, 0.1)};
        JkoConfig c;
        c.tau = tau;
        return run_scheme(start, pme(), c, 0.2);
    };
    const Trajectory coarse = spreading(256, 2e-3);
    const Trajectory fine = spreading(512, 1e-3);

    TestFunction probe;
    probe.center = 0.2;
    probe.width = 0.6;
    const double r_coarse =
        weak_residual(coarse, pme(), probe, 1, 0, static_cast<int>(coarse.steps.size()));
    const double r_fine =
        weak_residual(fine, pme(), probe, 1, 0, static_cast<int>(fine.steps.size()));
    CHECK(r_coarse / r_fine >= 1.5);
}

TEST_CASE("symmetrized self-kernel assembly equals the convolution form") {
    // For an odd table (the gradient of an even kernel), pairing the
    // antisymmetrized weights is exactly twice the convolution pairing;
    // this is the x <-> y swap identity behind the symmetrized term.
    Grid1D g(-1.0, 1.0, 48);
    const ModelSpec model = coupled_example1();
    const std::vector<double> table = kernel_table(model.H1.grad, g);
    const Density rho = gaussian_density(g, 0.1, 0.3);
    TestFunction phi;
    phi.center = 0.0;
    phi.width = 0.55;
    const std::vector<double> w = phi.grads(g);

    const double antisym = kernels::antisym_pair_sum(table, w, rho.values());
    double conv = 0.0;
    const int n = g.n_cells;
    for (int j = 0; j < n; ++j) {
        double inner = 0.0;
        for (int k = 0; k < n; ++k) inner += table[static_cast<size_t>(j - k + n - 1)] * rho[k];
        conv += w[static_cast<size_t>(j)] * rho[j] * inner;
    }
    CHECK(antisym == doctest::Approx(2.0 * conv).epsilon(1e-12));
}

TEST_CASE("difference quotient lemma shows the first-order rate") {
    Grid1D g(-1.0, 1.0, 4096);
    const std::vector<double> eps_list{1e-2, 5e-3, 2.5e-3};

    // zeta supported outside the grid: the quotient is identically zero
    TestFunction far;
    far.center = 5.0;
    far.width = 0.5;
    std::vector<double> f(static_cast<size_t>(g.n_cells));
    for (int j = 0; j < g.n_cells; ++j) f[static_cast<size_t>(j)] = std::sin(g.center(j));
    const DiagnosticEntry zero = check_difference_quotient(f, g, far, eps_list);
    CHECK(zero.pass);
    CHECK(zero.fitted.at("e0") == 0.0);
    CHECK(zero.fitted.at("e2") == 0.0);

    // linear f: piecewise-linear interpolation and centered differences are
    // both exact, so the quotient matches zeta f' to rounding
    TestFunction zeta;
    zeta.center = 0.0;
    zeta.width = 0.4;
    for (int j = 0; j < g.n_cells; ++j) f[static_cast<size_t>(j)] = g.center(j);
    const DiagnosticEntry lin = check_difference_quotient(f, g, zeta, eps_list);
    CHECK(lin.pass);
    CHECK(lin.fitted.at("e0") <= 1e-13);

    // smooth bump f: the error is dominated by the Taylor remainder, which
    // halves with eps
    TestFunction fb;
    fb.center = -0.1;
    fb.width = 0.5;
    for (int j = 0; j < g.n_cells; ++j) f[static_cast<size_t>(j)] = fb.value(g.center(j));
    const DiagnosticEntry smooth = check_difference_quotient(f, g, zeta, eps_list);
    CHECK(smooth.pass);
    CHECK(smooth.fitted.at("ratio0") >= 1.8);
    CHECK(smooth.fitted.at("ratio1") >= 1.8);

    // a perturbation steep enough to fold the map over is refused
    TestFunction steep;
    steep.center = 0.0;
    steep.width = 0.25;
    CHECK_THROWS_AS(check_difference_quotient(f, g, steep, std::vector<double>{0.25}),
                    NonMonotonePerturbation);
}

TEST_CASE("accumulated gradient norm is stable under halving tau") {
    Grid1D g(-1.5, 1.5, 128);
    SpeciesPair init{barenblatt(g, 0.1), barenblatt(g, 0.1)};
    JkoConfig cc;
    cc.tau = 2e-3;
    const Trajectory coarse = run_scheme(init, pme(), cc, 0.05);
    JkoConfig cf;
    cf.tau = 1e-3;
    const Trajectory fine = run_scheme(init, pme(), cf, 0.05);

    const DiagnosticEntry e = check_h1_refinement(coarse, fine, pme());
    CHECK(e.pass);
    CHECK(e.fitted.at("ratio") > 0.75);
    CHECK(e.fitted.at("ratio") < 1.33);

    CHECK_THROWS_AS(check_h1_refinement(coarse, coarse, pme()), RangeError);
}

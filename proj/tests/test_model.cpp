#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "crossdiff/errors.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/presets.hpp"

using namespace crossdiff;

namespace {

// Unit mass concentrated in a single cell.
Density one_cell(const Grid1D& g, int j) {
    std::vector<double> v(static_cast<size_t>(g.n_cells), 0.0);
    v[static_cast<size_t>(j)] = 1.0 / g.h;
    return {g, v};
}

} // namespace

TEST_CASE("partial derivatives of A match finite differences") {
    auto check_derivs = [](const DiffusionSpec& d, double r1, double r2) {
        const double step = 1e-5;
        const double fd1 = (d.a_value(r1 + step, r2) - d.a_value(r1 - step, r2)) / (2.0 * step);
        const double fd2 = (d.a_value(r1, r2 + step) - d.a_value(r1, r2 - step)) / (2.0 * step);
        CHECK(d.a_rho1(r1, r2) == doctest::Approx(fd1).epsilon(1e-6));
        CHECK(d.a_rho2(r1, r2) == doctest::Approx(fd2).epsilon(1e-6));

        double a11, a12, a22;
        d.a_hessian(r1, r2, a11, a12, a22);
        const double fd11 = (d.a_rho1(r1 + step, r2) - d.a_rho1(r1 - step, r2)) / (2.0 * step);
        const double fd12 = (d.a_rho1(r1, r2 + step) - d.a_rho1(r1, r2 - step)) / (2.0 * step);
        const double fd22 = (d.a_rho2(r1, r2 + step) - d.a_rho2(r1, r2 - step)) / (2.0 * step);
        CHECK(a11 == doctest::Approx(fd11).epsilon(1e-5));
        CHECK(a12 == doctest::Approx(fd12).epsilon(1e-5));
        CHECK(a22 == doctest::Approx(fd22).epsilon(1e-5));
    };

    check_derivs(presets::decoupled(1.0, 0.5, 2.0, 3.0), 0.7, 1.3);
    check_derivs(presets::example1(0.5, 0.25, 2.0, 2.0), 1.1, 0.4);
    check_derivs(presets::example2(1.0, 1.0), 0.9, 0.6);
    check_derivs(presets::example3(1.0, 0.05, 1.5, 2.0), 0.7, 1.3);
}

TEST_CASE("diffusion energy of flat profiles") {
    // A = 0.5 rho1^2 + 0.25 (rho1 + rho2)^2 at rho1 = rho2 = 1 gives 1.5;
    // with a = b = 1 it gives 1 + 4 = 5. Flat profiles make this exact.
    Grid1D g(0.0, 1.0, 64);
    Density u = presets::uniform_density(g, 0.0, 1.0);
    SpeciesPair pair(u, u);

    CHECK(diffusion_energy(pair, presets::example1(1.0, 1.0, 2.0, 2.0)) ==
          doctest::Approx(5.0).epsilon(1e-12));
    CHECK(diffusion_energy(pair, presets::example1(0.5, 0.25, 2.0, 2.0)) ==
          doctest::Approx(1.5).epsilon(1e-12));
    CHECK(diffusion_energy(pair, presets::zero_diffusion()) == 0.0);
}

TEST_CASE("self energy of the uniform density under quadratic confinement") {
    // (1/2) int int (x-y)^2/2 dx dy over the unit square = 1/24.
    Grid1D g(0.0, 1.0, 512);
    Density u = presets::uniform_density(g, 0.0, 1.0);
    PotentialSpec H = presets::quadratic_self(KernelKind::self1, 1.0);
    CHECK(self_energy(u, H) == doctest::Approx(1.0 / 24.0).epsilon(1e-3));
}

TEST_CASE("cross energy of coincident point masses is the kernel at zero") {
    Grid1D g(-1.0, 1.0, 64);
    Density spike = one_cell(g, 32);
    PotentialSpec K = presets::raw_gaussian(KernelKind::cross1, -1.0, 1.0);
    CHECK(cross_energy(spike, spike, K) == doctest::Approx(-1.0).epsilon(1e-12));

    // Separated spikes see the kernel at their distance.
    Density far = one_cell(g, 48);
    const double d = g.center(48) - g.center(32);
    CHECK(cross_energy(spike, far, K) == doctest::Approx(-std::exp(-d * d)).epsilon(1e-12));
}

TEST_CASE("energies reject mismatched kernel kinds") {
    Grid1D g(0.0, 1.0, 64);
    Density u = presets::uniform_density(g, 0.0, 1.0);
    PotentialSpec H = presets::quadratic_self(KernelKind::self1, 1.0);
    PotentialSpec K = presets::gaussian(KernelKind::cross1, 0.5, 1.0);

    CHECK_THROWS_AS(self_energy(u, K), KindMismatch);
    CHECK_THROWS_AS(cross_energy(u, u, H), KindMismatch);
}

TEST_CASE("relative energy splits into its named parts") {
    Grid1D g(-2.0, 2.0, 128);
    SpeciesPair cand(presets::gaussian_density(g, -0.3, 0.4), presets::triangle_density(g, 0.4, 0.8));
    SpeciesPair frozen(presets::uniform_density(g, -1.0, 1.0), presets::gaussian_density(g, 0.0, 0.5));
    ModelSpec m = presets::coupled_example1();

    EnergySplit s = relative_energy_split(cand, frozen, m);
    CHECK(s.diffusion == doctest::Approx(diffusion_energy(cand, m.diffusion)).epsilon(1e-14));
    CHECK(s.self1 == doctest::Approx(self_energy(cand.rho1, m.H1)).epsilon(1e-14));
    CHECK(s.self2 == doctest::Approx(self_energy(cand.rho2, m.H2)).epsilon(1e-14));
    CHECK(s.cross1 == doctest::Approx(cross_energy(cand.rho1, frozen.rho2, m.K1)).epsilon(1e-14));
    CHECK(s.cross2 == doctest::Approx(cross_energy(cand.rho2, frozen.rho1, m.K2)).epsilon(1e-14));
    CHECK(s.total() == doctest::Approx(s.f_tilde() + s.cross()).epsilon(1e-14));
    CHECK(relative_energy(cand, frozen, m) == doctest::Approx(s.total()).epsilon(1e-14));

    // Equal species and a shared kernel make the two cross terms coincide.
    ModelSpec sym = presets::attraction(0.5, 1.0, 0.5, 1.0);
    SpeciesPair same(cand.rho1, cand.rho1);
    EnergySplit ss = relative_energy_split(same, same, sym);
    CHECK(ss.cross1 == doctest::Approx(ss.cross2).epsilon(1e-14));
}

TEST_CASE("model constants aggregate the kernel declarations") {
    ModelSpec m = presets::coupled_example1();
    const double lip1 = m.K1.lip_value, lip2 = m.K2.lip_value;
    CHECK(m.cross_lipschitz_sq() == doctest::Approx(lip1 * lip1 + lip2 * lip2).epsilon(1e-14));
    CHECK(m.laplacian_bound_total() ==
          doctest::Approx(m.H1.laplacian_bound + m.H2.laplacian_bound + m.K1.laplacian_bound +
                          m.K2.laplacian_bound)
              .epsilon(1e-14));

    ModelSpec z = presets::zero_model();
    CHECK(z.cross_lipschitz_sq() == 0.0);
    CHECK(z.laplacian_bound_total() == 0.0);
}

TEST_CASE("audit passes the well-posed diffusion families") {
    SampleBox box;
    for (const DiffusionSpec& d :
         {presets::decoupled(1.0, 1.0, 2.0, 2.0), presets::example1(0.5, 0.25, 2.0, 2.0),
          presets::example2(1.0, 1.0), presets::example3(1.0, 0.05, 1.5, 2.0)}) {
        AuditReport rep = audit_diffusion(d, box, 4096);
        INFO("family ", d.name);
        for (const AuditEntry& e : rep.entries) {
            INFO("entry ", e.name, " margin ", e.margin, " witness ", e.witness);
            CHECK(e.pass);
        }
        CHECK(rep.pass());
    }
}

TEST_CASE("audit refutes the coercivity of the plain squared sum") {
    AuditReport rep = audit_diffusion(presets::sum_square(), SampleBox{}, 4096);
    const AuditEntry* e = rep.find("coercivity");
    REQUIRE(e != nullptr);
    CHECK_FALSE(e->pass);
    CHECK(e->margin < 0.0);
    // The bound degenerates along (1,-1) independent of the base point, so the
    // first sampled point, next to vacuum, is already a witness.
    CHECK(e->witness.find("0.001") != std::string::npos);
    CHECK_FALSE(rep.pass());

    // The pointwise lower bound still holds for this A.
    const AuditEntry* lb = rep.find("lower_bound");
    REQUIRE(lb != nullptr);
    CHECK(lb->pass);
}

TEST_CASE("audit accepts the preset kernels") {
    ModelSpec m = presets::coupled_example1();
    for (const PotentialSpec* w : {&m.H1, &m.H2, &m.K1, &m.K2}) {
        AuditReport rep = audit_potential(*w, 8.0, 4096);
        INFO("kernel ", w->name, " kind ", static_cast<int>(w->kind));
        for (const AuditEntry& e : rep.entries) {
            INFO("entry ", e.name, " margin ", e.margin);
            CHECK(e.pass);
        }
        CHECK(rep.pass());
    }
}

TEST_CASE("audit measures the gaussian lipschitz constant") {
    // sup |d/dx exp(-x^2)| = sqrt(2/e) at x = 1/sqrt(2).
    PotentialSpec K = presets::raw_gaussian(KernelKind::cross1, -1.0, 1.0);
    AuditReport rep = audit_potential(K, 8.0, 20000);
    CHECK(rep.pass());

    const AuditEntry* e = rep.find("lipschitz");
    REQUIRE(e != nullptr);
    CHECK(e->fitted.at("fitted") == doctest::Approx(0.85776388496070679).epsilon(2e-6));

    // The raw form misses the origin normalization; recorded, not fatal.
    const AuditEntry* z = rep.find("zero_value");
    REQUIRE(z != nullptr);
    CHECK(z->informational);
    CHECK_FALSE(z->pass);
}

TEST_CASE("audit refutes quadratic growth used as a cross kernel") {
    PotentialSpec bad;
    bad.name = "quadratic_cross";
    bad.kind = KernelKind::cross1;
    bad.zero = false;
    bad.value = [](double x) { return 0.5 * x * x; };
    bad.grad = [](double x) { return x; };
    bad.lip_value = 1.0; // no finite value is correct; this one is refutable
    bad.lip_grad = 1.0;
    bad.laplacian_bound = 1.0;
    bad.growth_upper = 0.5;
    bad.growth_lower = 0.0;

    AuditReport rep = audit_potential(bad, 8.0, 4096);
    const AuditEntry* e = rep.find("lipschitz");
    REQUIRE(e != nullptr);
    CHECK_FALSE(e->pass);
    CHECK(e->fitted.at("fitted") == doctest::Approx(8.0).epsilon(1e-2));
}

TEST_CASE("audit refutes the laplacian bound of the absolute value") {
    // The kink carries an atom: second difference quotients grow like 2/delta.
    PotentialSpec w = presets::abs_self(KernelKind::self1);
    AuditReport rep = audit_potential(w, 8.0, 4096);
    const AuditEntry* e = rep.find("laplacian_bound");
    REQUIRE(e != nullptr);
    CHECK_FALSE(e->pass);
    CHECK(e->fitted.at("worst_quotient") >= 1e3);
}

TEST_CASE("audit flags odd self kernels") {
    PotentialSpec odd;
    odd.name = "sine";
    odd.kind = KernelKind::self2;
    odd.zero = false;
    odd.value = [](double x) { return std::sin(x); };
    odd.grad = [](double x) { return std::cos(x); };
    odd.lip_value = 1.0;
    odd.lip_grad = 1.0;
    odd.laplacian_bound = 1.0;
    odd.grad_growth = 1.0;
    odd.growth_upper = 1.0;
    odd.growth_lower = 1.0;

    AuditReport rep = audit_potential(odd, 8.0, 4096);
    const AuditEntry* e = rep.find("evenness");
    REQUIRE(e != nullptr);
    CHECK_FALSE(e->pass);
}

TEST_CASE("model audit covers the diffusion part and all four kernels") {
    std::vector<AuditReport> reports = audit_model(presets::coupled_example1(), SampleBox{}, 4096);
    REQUIRE(reports.size() == 5);
    CHECK(reports[0].subject == "diffusion:example1");
    for (const AuditReport& r : reports) CHECK(r.pass());

    // The zero model is trivially admissible.
    for (const AuditReport& r : audit_model(presets::zero_model(), SampleBox{}, 256))
        CHECK(r.pass());
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "crossdiff/errors.hpp"
#include "crossdiff/presets.hpp"
#include "crossdiff/transport.hpp"

using namespace crossdiff;

namespace {

// Two uniform blocks with a vacuum gap in between.
Density two_blocks(const Grid1D& g) {
    std::vector<double> v(static_cast<size_t>(g.n_cells), 0.0);
    for (int j = 0; j < g.n_cells; ++j) {
        const double x = g.center(j);
        if ((x > -1.0 && x < -0.5) || (x > 0.5 && x < 1.0)) v[static_cast<size_t>(j)] = 1.0;
    }
    return normalize(v, g);
}

} // namespace

TEST_CASE("cdf and quantile of the uniform density") {
    Grid1D g(0.0, 1.0, 64);
    Density u = presets::uniform_density(g, 0.0, 1.0);
    PiecewiseCdf F(u);

    CHECK(F.mass() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(F.quantile_at(0.25) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(F.quantile_at(0.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(F.quantile_at(1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quantile sampling resolves vacuum jumps") {
    Grid1D g(-2.0, 2.0, 512);
    Density d = two_blocks(g);
    QuantileVector q = quantile(d, 2048);

    // Half the mass sits left of the gap, half right; the quantile jumps from
    // -0.5 to +0.5 across level 1/2.
    CHECK(q.values[1023] == doctest::Approx(-0.5).epsilon(1e-2));
    CHECK(q.values[1024] == doctest::Approx(0.5).epsilon(1e-2));

    CHECK_THROWS_AS(quantile(d, 256), RangeError); // must resolve the mesh
    CHECK(quantile(d, 0).n_q == default_n_q(g));
}

TEST_CASE("distance between shifted uniform blocks is the shift") {
    // Quantiles Q_mu(s) = s and Q_nu(s) = 1 + s differ by 1 at every level.
    Grid1D g(0.0, 3.0, 768);
    Density mu = presets::uniform_density(g, 0.0, 1.0);
    Density nu = presets::uniform_density(g, 1.0, 2.0);
    CHECK(w2(mu, nu, 4096) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("distance between shifted gaussians is the shift") {
    Grid1D g(-3.0, 3.0, 1024);
    Density mu = presets::gaussian_density(g, -0.5, 0.2);
    Density nu = presets::gaussian_density(g, 0.5, 0.2);
    CHECK(w2(mu, nu, 4096) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("distance from two blocks to the enclosing uniform") {
    // Exact value 1/sqrt(12): Q differences are -s on [0,1/2] and 1-s above.
    Grid1D g(-2.0, 2.0, 1024);
    Density blocks = two_blocks(g);
    Density u = presets::uniform_density(g, -1.0, 1.0);
    CHECK(w2(blocks, u, 8192) == doctest::Approx(0.28867513459481287).epsilon(1e-3));
}

TEST_CASE("product distance sums the squared per-species distances") {
    Grid1D g(0.0, 3.0, 768);
    Density a = presets::uniform_density(g, 0.0, 1.0);
    Density b = presets::uniform_density(g, 0.3, 1.3);
    SpeciesPair mu(a, a), nu(b, b);

    // The shift is not a whole number of cells, so the partial end cells
    // leave an O(h^3) remainder in the squared distance.
    const double d1 = w2(a, b, 4096);
    CHECK(d1 == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(product_w2_sq(mu, nu, 4096) == doctest::Approx(0.18).epsilon(1e-6));
}

TEST_CASE("metric axioms on a small corpus") {
    Grid1D g(-2.0, 2.0, 256);
    std::vector<Density> corpus;
    corpus.push_back(presets::uniform_density(g, -1.0, 1.0));
    corpus.push_back(presets::uniform_density(g, -0.3, 1.7));
    corpus.push_back(presets::gaussian_density(g, 0.0, 0.4));
    corpus.push_back(presets::gaussian_density(g, -0.8, 0.15));
    corpus.push_back(presets::triangle_density(g, 0.5, 0.7));
    corpus.push_back(presets::barenblatt(g, 0.1));
    corpus.push_back(two_blocks(g));

    const int nq = 1024;
    const int n = static_cast<int>(corpus.size());
    for (int i = 0; i < n; ++i) {
        CHECK(w2(corpus[i], corpus[i], nq) == 0.0);
        for (int j = i + 1; j < n; ++j) {
            const double dij = w2(corpus[i], corpus[j], nq);
            CHECK(dij > 0.0);
            CHECK(dij == w2(corpus[j], corpus[i], nq)); // exact symmetry
            for (int k = 0; k < n; ++k) {
                const double dik = w2(corpus[i], corpus[k], nq);
                const double dkj = w2(corpus[k], corpus[j], nq);
                CHECK(dij <= dik + dkj + 1e-8);
            }
        }
    }
}

TEST_CASE("monotone rearrangement realizes the distance") {
    Grid1D g(-2.0, 2.0, 1024);
    Density mu = presets::gaussian_density(g, 0.0, 0.3);
    Density nu = presets::triangle_density(g, 0.5, 0.6);

    std::vector<double> T = optimal_map(mu, nu);
    for (int j = 0; j + 1 < g.n_cells; ++j) CHECK(T[j] <= T[j + 1] + 1e-12);

    double cost = 0.0;
    for (int j = 0; j < g.n_cells; ++j) {
        const double dx = T[j] - g.center(j);
        cost += g.h * dx * dx * mu[j];
    }
    const double dist = w2(mu, nu, 4096);
    CHECK(cost == doctest::Approx(dist * dist).epsilon(1e-3));

    // Pushing mu forward through the map lands on nu up to O(h).
    Density pushed = pushforward(mu, T);
    CHECK(l1_distance(pushed, nu) <= 0.02);
}

TEST_CASE("optimal map requires connected source support") {
    Grid1D g(-2.0, 2.0, 256);
    Density gap = two_blocks(g);
    Density target = presets::uniform_density(g, -1.0, 1.0);
    CHECK_THROWS_AS(optimal_map(gap, target), DegenerateSupport);
    CHECK_NOTHROW(optimal_map(target, gap)); // only the source must be connected
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "crossdiff/kernels.hpp"

namespace {

double gauss(double x, const void*) { return std::exp(-x * x); }

std::vector<double> make_centers(int n, double lo, double hi) {
    std::vector<double> c(n);
    const double h = (hi - lo) / n;
    for (int j = 0; j < n; ++j) c[j] = lo + (j + 0.5) * h;
    return c;
}

std::vector<double> pseudo_random(int n, unsigned seed) {
    // Small LCG; good enough to decorrelate the agreement checks.
    std::vector<double> v(n);
    unsigned s = seed;
    for (int j = 0; j < n; ++j) {
        s = s * 1664525u + 1013904223u;
        v[j] = 0.5 + (s >> 8) * (1.0 / (1u << 24));
    }
    return v;
}

} // namespace

using namespace crossdiff;

TEST_CASE("tabulate stores signed offsets") {
    const int n = 64;
    auto centers = make_centers(n, -1.0, 1.0);
    auto table = kernels::tabulate(centers, gauss, nullptr);
    REQUIRE(table.size() == static_cast<size_t>(2 * n - 1));
    const double h = 2.0 / n;
    CHECK(table[n - 1] == doctest::Approx(1.0));             // zero offset
    CHECK(table[n] == doctest::Approx(std::exp(-h * h)));    // +h
    CHECK(table[n - 2] == doctest::Approx(std::exp(-h * h)));// -h
    CHECK(table[0] == table[2 * n - 2]);                     // even sampling
}

TEST_CASE("convolution matches a direct evaluation") {
    const int n = 128;
    const double h = 2.0 / n;
    auto centers = make_centers(n, -1.0, 1.0);
    auto table = kernels::tabulate(centers, gauss, nullptr);
    auto rho = pseudo_random(n, 7u);

    std::vector<double> out(n);
    kernels::convolve_serial(table, rho, h, out);

    for (int j : {0, 13, 64, 127}) {
        double direct = 0.0;
        for (int k = 0; k < n; ++k) direct += h * gauss(centers[j] - centers[k], nullptr) * rho[k];
        CHECK(out[j] == doctest::Approx(direct).epsilon(1e-13));
    }
}

TEST_CASE("pair sum matches the quadratic form") {
    const int n = 96;
    auto centers = make_centers(n, -1.0, 1.0);
    auto table = kernels::tabulate(centers, gauss, nullptr);
    auto a = pseudo_random(n, 11u);
    auto b = pseudo_random(n, 23u);

    double direct = 0.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) direct += gauss(centers[j] - centers[k], nullptr) * a[j] * b[k];

    CHECK(kernels::pair_sum_serial(table, a, b) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("antisymmetrized pair sum matches a direct evaluation") {
    const int n = 80;
    auto centers = make_centers(n, -1.0, 1.0);
    auto table = kernels::tabulate(centers, gauss, nullptr);
    auto a = pseudo_random(n, 3u);
    auto w = pseudo_random(n, 5u);

    double direct = 0.0;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            direct += gauss(centers[j] - centers[k], nullptr) * (w[j] - w[k]) * a[j] * a[k];

    CHECK(kernels::antisym_pair_sum_serial(table, w, a) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("parallel variants agree bitwise with the serial reference") {
    // The blocked reduction fixes the summation order, so the OpenMP path must
    // reproduce the serial result exactly, not just to rounding.
    for (int n : {100, 512, 1500}) {
        auto centers = make_centers(n, -2.0, 2.0);
        auto table = kernels::tabulate(centers, gauss, nullptr);
        auto a = pseudo_random(n, 101u);
        auto b = pseudo_random(n, 577u);
        const double h = 4.0 / n;

        std::vector<double> out_s(n), out_p(n);
        kernels::convolve_serial(table, a, h, out_s);
        kernels::convolve_omp(table, a, h, out_p);
        for (int j = 0; j < n; ++j) CHECK(out_s[j] == out_p[j]);

        CHECK(kernels::pair_sum_serial(table, a, b) == kernels::pair_sum_omp(table, a, b));
        CHECK(kernels::antisym_pair_sum_serial(table, b, a) ==
              kernels::antisym_pair_sum_omp(table, b, a));
    }
}

TEST_CASE("runtime toggle routes to the serial path") {
    const int n = 256;
    auto centers = make_centers(n, -1.0, 1.0);
    auto table = kernels::tabulate(centers, gauss, nullptr);
    auto a = pseudo_random(n, 31u);

    kernels::set_parallel_enabled(false);
    CHECK_FALSE(kernels::parallel_enabled());
    const double off = kernels::pair_sum(table, a, a);

    kernels::set_parallel_enabled(true);
    const double on = kernels::pair_sum(table, a, a);

    CHECK(off == on); // dispatch changes the path, never the value
    CHECK(off == kernels::pair_sum_serial(table, a, a));
}

TEST_CASE("block sum is an exact sum on small inputs") {
    std::vector<double> v{1.0, 2.5, -0.5, 4.0};
    CHECK(kernels::block_sum(v) == 7.0);
    CHECK(kernels::block_sum(std::vector<double>{}) == 0.0);
}

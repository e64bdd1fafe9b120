// Timing comparison of the serial and OpenMP interaction kernels.
// Usage: bench_kernels [max_n]   (grid sizes 512, 1024, ..., max_n; default 4096)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "crossdiff/kernels.hpp"

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

double gauss(double x, const void*) { return std::exp(-x * x); }

struct Timing {
    double convolve_ms = 0.0;
    double pair_sum_ms = 0.0;
    double checksum = 0.0;
};

Timing run_case(int n, int reps, bool parallel) {
    crossdiff::kernels::set_parallel_enabled(parallel);

    const double h = 4.0 / n;
    std::vector<double> centers(n), rho(n), out(n);
    for (int j = 0; j < n; ++j) {
        centers[j] = -2.0 + (j + 0.5) * h;
        rho[j] = 1.0 + std::sin(0.37 * j);
    }
    const auto table = crossdiff::kernels::tabulate(centers, gauss, nullptr);

    Timing t;
    double start = now_ms();
    for (int r = 0; r < reps; ++r) crossdiff::kernels::convolve(table, rho, h, out);
    t.convolve_ms = (now_ms() - start) / reps;

    start = now_ms();
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) acc += crossdiff::kernels::pair_sum(table, rho, rho);
    t.pair_sum_ms = (now_ms() - start) / reps;
    t.checksum = acc + out[n / 2];
    return t;
}

} // namespace

int main(int argc, char** argv) {
    const int max_n = argc > 1 ? std::atoi(argv[1]) : 4096;

    std::printf("%8s %14s %14s %14s %14s %8s\n", "n", "conv serial", "conv omp",
                "pair serial", "pair omp", "speedup");
    for (int n = 512; n <= max_n; n *= 2) {
        const int reps = n <= 1024 ? 50 : 10;
        const Timing serial = run_case(n, reps, false);
        const Timing omp = run_case(n, reps, true);
        if (std::abs(serial.checksum - omp.checksum) > 1e-9 * std::abs(serial.checksum)) {
            std::fprintf(stderr, "checksum mismatch at n=%d\n", n);
            return 1;
        }
        const double speedup = serial.pair_sum_ms / (omp.pair_sum_ms > 0.0 ? omp.pair_sum_ms : 1e-9);
        std::printf("%8d %12.3fms %12.3fms %12.3fms %12.3fms %7.2fx\n", n, serial.convolve_ms,
                    omp.convolve_ms, serial.pair_sum_ms, omp.pair_sum_ms, speedup);
    }
    return 0;
}

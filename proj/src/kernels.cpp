#include "crossdiff/kernels.hpp"

#include <algorithm>
#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace crossdiff::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Fixed block length for deterministic reductions; independent of thread count.
constexpr int kBlock = 1024;

inline double row_dot(const double* trow, const double* b, int n) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += trow[-k] * b[k];
    return acc;
}

} // namespace

bool parallel_enabled() {
#ifdef _OPENMP
    return g_parallel.load();
#else
    return false;
#endif
}

void set_parallel_enabled(bool on) { g_parallel.store(on); }

std::vector<double> tabulate(const std::vector<double>& centers,
                             double (*eval)(double, const void*), const void* ctx) {
    const int n = static_cast<int>(centers.size());
    std::vector<double> table(2 * n - 1);
    const double h = n > 1 ? centers[1] - centers[0] : 0.0;
    for (int d = -(n - 1); d <= n - 1; ++d) table[d + n - 1] = eval(d * h, ctx);
    return table;
}

void convolve_serial(std::span<const double> table, std::span<const double> rho,
                     double h, std::span<double> out) {
    const int n = static_cast<int>(rho.size());
    for (int j = 0; j < n; ++j)
        out[j] = h * row_dot(table.data() + j + n - 1, rho.data(), n);
}

void convolve_omp(std::span<const double> table, std::span<const double> rho,
                  double h, std::span<double> out) {
    const int n = static_cast<int>(rho.size());
#pragma omp parallel for schedule(static)
    for (int j = 0; j < n; ++j)
        out[j] = h * row_dot(table.data() + j + n - 1, rho.data(), n);
}

void convolve(std::span<const double> table, std::span<const double> rho,
              double h, std::span<double> out) {
    if (parallel_enabled())
        convolve_omp(table, rho, h, out);
    else
        convolve_serial(table, rho, h, out);
}

double block_sum(std::span<const double> v) {
    const int n = static_cast<int>(v.size());
    double total = 0.0;
    for (int b = 0; b < n; b += kBlock) {
        double part = 0.0;
        const int end = std::min(n, b + kBlock);
        for (int j = b; j < end; ++j) part += v[j];
        total += part;
    }
    return total;
}

double pair_sum_serial(std::span<const double> table, std::span<const double> a,
                       std::span<const double> b) {
    const int n = static_cast<int>(a.size());
    double total = 0.0;
    for (int blk = 0; blk < n; blk += kBlock) {
        double part = 0.0;
        const int end = std::min(n, blk + kBlock);
        for (int j = blk; j < end; ++j)
            part += a[j] * row_dot(table.data() + j + n - 1, b.data(), n);
        total += part;
    }
    return total;
}

double pair_sum_omp(std::span<const double> table, std::span<const double> a,
                    std::span<const double> b) {
    const int n = static_cast<int>(a.size());
    const int n_blocks = (n + kBlock - 1) / kBlock;
    std::vector<double> parts(n_blocks, 0.0);
#pragma omp parallel for schedule(static)
    for (int blk = 0; blk < n_blocks; ++blk) {
        double part = 0.0;
        const int lo = blk * kBlock;
        const int end = std::min(n, lo + kBlock);
        for (int j = lo; j < end; ++j)
            part += a[j] * row_dot(table.data() + j + n - 1, b.data(), n);
        parts[blk] = part;
    }
    double total = 0.0;
    for (double p : parts) total += p;
    return total;
}

double pair_sum(std::span<const double> table, std::span<const double> a,
                std::span<const double> b) {
    return parallel_enabled() ? pair_sum_omp(table, a, b) : pair_sum_serial(table, a, b);
}

namespace {

inline double antisym_row(const double* trow, const double* w, const double* a,
                          double wj, int n) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += trow[-k] * (wj - w[k]) * a[k];
    return acc;
}

} // namespace

double antisym_pair_sum_serial(std::span<const double> table, std::span<const double> w,
                               std::span<const double> a) {
    const int n = static_cast<int>(a.size());
    double total = 0.0;
    for (int blk = 0; blk < n; blk += kBlock) {
        double part = 0.0;
        const int end = std::min(n, blk + kBlock);
        for (int j = blk; j < end; ++j)
            part += a[j] * antisym_row(table.data() + j + n - 1, w.data(), a.data(), w[j], n);
        total += part;
    }
    return total;
}

double antisym_pair_sum_omp(std::span<const double> table, std::span<const double> w,
                            std::span<const double> a) {
    const int n = static_cast<int>(a.size());
    const int n_blocks = (n + kBlock - 1) / kBlock;
    std::vector<double> parts(n_blocks, 0.0);
#pragma omp parallel for schedule(static)
    for (int blk = 0; blk < n_blocks; ++blk) {
        double part = 0.0;
        const int lo = blk * kBlock;
        const int end = std::min(n, lo + kBlock);
        for (int j = lo; j < end; ++j)
            part += a[j] * antisym_row(table.data() + j + n - 1, w.data(), a.data(), w[j], n);
        parts[blk] = part;
    }
    double total = 0.0;
    for (double p : parts) total += p;
    return total;
}

double antisym_pair_sum(std::span<const double> table, std::span<const double> w,
                        std::span<const double> a) {
    return parallel_enabled() ? antisym_pair_sum_omp(table, w, a)
                              : antisym_pair_sum_serial(table, w, a);
}

} // namespace crossdiff::kernels

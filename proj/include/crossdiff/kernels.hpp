#pragma once

#include <span>
#include <vector>

namespace crossdiff::kernels {

// The O(n^2) interaction sums below are the hot loops of the energy and
// residual assembly. Each has a serial reference implementation and an
// OpenMP variant; the unqualified name dispatches on the runtime toggle.
// Reductions are accumulated over fixed-size blocks that are combined in
// block order, so results are bit-identical for any thread count.

bool parallel_enabled();
void set_parallel_enabled(bool on);

/// Kernel values tabulated at signed cell offsets: table[d + n - 1] = W(d*h)
/// for d = -(n-1)..(n-1).
std::vector<double> tabulate(const std::vector<double>& centers,
                             double (*eval)(double, const void*), const void* ctx);

/// out[j] = h * sum_k table[j - k + n - 1] * rho[k]   (discrete convolution)
void convolve_serial(std::span<const double> table, std::span<const double> rho,
                     double h, std::span<double> out);
void convolve_omp(std::span<const double> table, std::span<const double> rho,
                  double h, std::span<double> out);
void convolve(std::span<const double> table, std::span<const double> rho,
              double h, std::span<double> out);

/// sum_{j,k} table[j - k + n - 1] * a[j] * b[k]
double pair_sum_serial(std::span<const double> table, std::span<const double> a,
                       std::span<const double> b);
double pair_sum_omp(std::span<const double> table, std::span<const double> a,
                    std::span<const double> b);
double pair_sum(std::span<const double> table, std::span<const double> a,
                std::span<const double> b);

/// sum_{j,k} table[j - k + n - 1] * (w[j] - w[k]) * a[j] * a[k]
/// (symmetrized pair sum used by the weak-form interaction residual)
double antisym_pair_sum_serial(std::span<const double> table, std::span<const double> w,
                               std::span<const double> a);
double antisym_pair_sum_omp(std::span<const double> table, std::span<const double> w,
                            std::span<const double> a);
double antisym_pair_sum(std::span<const double> table, std::span<const double> w,
                        std::span<const double> a);

/// Deterministic blocked sum of a vector (serial combination of block partials).
double block_sum(std::span<const double> v);

} // namespace crossdiff::kernels

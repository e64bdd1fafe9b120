#include "crossdiff/fv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "crossdiff/errors.hpp"
#include "crossdiff/kernels.hpp"

namespace crossdiff {

namespace {

// Working state of one species inside the time loop. Fluxes live on the
// n_cells - 1 interior faces; the domain boundary is a wall (zero flux), so
// the update telescopes and mass is conserved to roundoff.
struct Species {
    std::vector<double> rho;
    std::vector<double> phi_diff;  // dA/drho_i per cell
    std::vector<double> phi_drift; // (H_i * rho_i + K_i * rho_other) per cell
    std::vector<double> flux;      // interior face fluxes
    std::vector<double> scale;     // per-cell outflow limiter factors
    std::vector<double> conv;      // convolution scratch
    std::vector<double> table_h, table_k;
    bool h_on = false, k_on = false;
};

void validate(const FvConfig& cfg) {
    if (!(cfg.dt > 0.0))
        throw RangeError("fv: dt must be positive");
    if (!(cfg.safety > 0.0) || cfg.safety > 1.0)
        throw RangeError("fv: safety must lie in (0, 1]");
    if (cfg.snapshot_dt < 0.0)
        throw RangeError("fv: snapshot_dt must be nonnegative");
    if (cfg.clip_tol < 0.0)
        throw RangeError("fv: clip_tol must be nonnegative");
}

} // namespace

Trajectory fv_run(const SpeciesPair& initial, const ModelSpec& model, const FvConfig& cfg,
                  double horizon, FvStats* stats) {
    validate(cfg);
    const Grid1D grid = initial.rho1.grid();
    const int n = grid.n_cells;
    const double h = grid.h;

    const double snap = cfg.snapshot_dt > 0.0 ? cfg.snapshot_dt : horizon;
    const int n_snap = static_cast<int>(std::floor(horizon / snap + 1e-9));
    if (n_snap < 1)
        throw TooFewSteps("fv: horizon " + std::to_string(horizon) +
                          " is shorter than one snapshot interval");

    Species sp[2];
    sp[0].rho = initial.rho1.values();
    sp[1].rho = initial.rho2.values();
    // reference masses: the rescale below restores these bit for bit, so a
    // substep with zero fluxes leaves the state untouched
    const double mass0[2] = {h * kernels::block_sum(sp[0].rho), h * kernels::block_sum(sp[1].rho)};
    const PotentialSpec* selfs[2] = {&model.H1, &model.H2};
    const PotentialSpec* crosses[2] = {&model.K1, &model.K2};
    for (int i = 0; i < 2; ++i) {
        Species& s = sp[i];
        s.phi_diff.assign(static_cast<size_t>(n), 0.0);
        s.phi_drift.assign(static_cast<size_t>(n), 0.0);
        s.flux.assign(static_cast<size_t>(n - 1), 0.0);
        s.scale.assign(static_cast<size_t>(n), 1.0);
        s.conv.assign(static_cast<size_t>(n), 0.0);
        s.h_on = !selfs[i]->zero;
        s.k_on = !crosses[i]->zero;
        if (s.h_on) s.table_h = kernel_table(selfs[i]->value, grid);
        if (s.k_on) s.table_k = kernel_table(crosses[i]->value, grid);
    }
    const DiffusionSpec& d = model.diffusion;

    FvStats local;
    FvStats& st = stats ? *stats : local;
    st = FvStats{};
    st.dt_min = std::numeric_limits<double>::infinity();

    Trajectory out;
    out.grid = grid;
    out.tau = snap;
    out.states.push_back(initial);
    out.steps.reserve(static_cast<size_t>(n_snap));

    std::vector<double> dmom(static_cast<size_t>(n));

    for (int k = 0; k < n_snap; ++k) {
        int substeps = 0;
        double t_in = 0.0; // time integrated inside this snapshot interval
        while (snap - t_in > snap * 1e-12) {
            // potentials per cell
            for (int i = 0; i < 2; ++i) {
                Species& s = sp[i];
                const std::vector<double>& other = sp[1 - i].rho;
#pragma omp parallel for schedule(static) if (kernels::parallel_enabled())
                for (int j = 0; j < n; ++j)
                    s.phi_diff[j] = i == 0 ? d.a_rho1(s.rho[j], other[j])
                                           : d.a_rho2(other[j], s.rho[j]);
                if (s.h_on || s.k_on) {
                    std::fill(s.phi_drift.begin(), s.phi_drift.end(), 0.0);
                    if (s.h_on) {
                        kernels::convolve(s.table_h, s.rho, h, s.conv);
                        for (int j = 0; j < n; ++j) s.phi_drift[j] += s.conv[j];
                    }
                    if (s.k_on) {
                        kernels::convolve(s.table_k, other, h, s.conv);
                        for (int j = 0; j < n; ++j) s.phi_drift[j] += s.conv[j];
                    }
                }
            }

            // face fluxes and the stability quantities
            double vmax = 0.0, dmax = 0.0;
            for (int i = 0; i < 2; ++i) {
                Species& s = sp[i];
#pragma omp parallel for schedule(static) if (kernels::parallel_enabled())
                for (int f = 0; f < n - 1; ++f) {
                    const double vd = -(s.phi_diff[f + 1] - s.phi_diff[f]) / h;
                    const double vk = -(s.phi_drift[f + 1] - s.phi_drift[f]) / h;
                    // diffusion part: centered face density, but never out of
                    // a vacuum cell (degenerate diffusion must not transport
                    // mass that is not there)
                    const double donor_d = vd > 0.0 ? s.rho[f] : s.rho[f + 1];
                    double flx = 0.0;
                    if (donor_d > 0.0) flx += vd * 0.5 * (s.rho[f] + s.rho[f + 1]);
                    // drift part: upwind
                    flx += vk * (vk > 0.0 ? s.rho[f] : s.rho[f + 1]);
                    s.flux[f] = flx;
                }
                for (int f = 0; f < n - 1; ++f) {
                    const double v = std::abs(s.phi_diff[f + 1] - s.phi_diff[f]) / h +
                                     std::abs(s.phi_drift[f + 1] - s.phi_drift[f]) / h;
                    vmax = std::max(vmax, v);
                }
                const std::vector<double>& other = sp[1 - i].rho;
                for (int j = 0; j < n; ++j) {
                    if (!(s.rho[j] > 0.0)) continue;
                    double a11, a12, a22;
                    const double r1 = i == 0 ? s.rho[j] : std::max(other[j], 1e-12);
                    const double r2 = i == 0 ? std::max(other[j], 1e-12) : s.rho[j];
                    d.a_hessian(r1, r2, a11, a12, a22);
                    const double diag = s.rho[j] * (i == 0 ? a11 : a22);
                    if (std::isfinite(diag)) dmax = std::max(dmax, diag);
                }
            }

            double cap = std::numeric_limits<double>::infinity();
            if (dmax > 0.0) cap = std::min(cap, h * h / (2.0 * dmax));
            if (vmax > 0.0) cap = std::min(cap, h / (2.0 * vmax));

            double dt = std::min(cfg.dt, snap - t_in);
            if (cfg.auto_cap) {
                dt = std::min(dt, cfg.safety * cap);
            } else if (dt > cap) {
                throw StabilityViolation("fv: requested step " + std::to_string(dt) +
                                         " exceeds the stability cap " + std::to_string(cap));
            }
            if (!(dt > snap * 1e-14))
                throw StabilityViolation("fv: stability cap collapsed to " +
                                         std::to_string(cap) + "; the state is blowing up");

            for (int i = 0; i < 2; ++i) {
                Species& s = sp[i];
                if (cfg.limiter) {
                    // scale down each cell's outflow so it cannot overdraw
                    for (int j = 0; j < n; ++j) {
                        double outflow = 0.0;
                        if (j < n - 1) outflow += std::max(s.flux[j], 0.0);
                        if (j > 0) outflow += std::max(-s.flux[j - 1], 0.0);
                        s.scale[j] = outflow * dt / h > s.rho[j] && outflow > 0.0
                                         ? s.rho[j] * h / (dt * outflow)
                                         : 1.0;
                    }
                    for (int f = 0; f < n - 1; ++f)
                        s.flux[f] *= s.flux[f] > 0.0 ? s.scale[f] : s.scale[f + 1];
                }

                // conservative update; track the moment identity
                //   d m1 = dt h sum_f flux_f   (walls contribute nothing)
                double mom_lhs = 0.0, flux_sum = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double fr = j < n - 1 ? s.flux[j] : 0.0;
                    const double fl = j > 0 ? s.flux[j - 1] : 0.0;
                    const double delta = -(dt / h) * (fr - fl);
                    dmom[j] = grid.center(j) * delta;
                    s.rho[j] += delta;
                }
                mom_lhs = h * kernels::block_sum(dmom);
                flux_sum = kernels::block_sum(s.flux);
                st.moment_residual =
                    std::max(st.moment_residual, std::abs(mom_lhs - dt * h * flux_sum));

                // conservation defect of the raw flux update, before any repair
                st.mass_drift = std::max(
                    st.mass_drift, std::abs(h * kernels::block_sum(s.rho) - mass0[i]));

                // positivity clip, then restore exact unit mass so roundoff
                // and clipped mass cannot accumulate across many substeps
                double clipped = 0.0;
                for (int j = 0; j < n; ++j)
                    if (s.rho[j] < 0.0) {
                        clipped -= s.rho[j] * h;
                        s.rho[j] = 0.0;
                    }
                st.clipped_mass += clipped;
                if (st.clipped_mass > cfg.clip_tol)
                    throw NegativityClipExceeded(
                        "fv: positivity clip removed " + std::to_string(st.clipped_mass) +
                        " of mass, more than the tolerated " + std::to_string(cfg.clip_tol));
                const double mass = h * kernels::block_sum(s.rho);
                if (!(mass > 0.0))
                    throw StabilityViolation("fv: species " + std::to_string(i + 1) +
                                             " lost all of its mass");
                const double fix = mass0[i] / mass;
                for (int j = 0; j < n; ++j) s.rho[j] *= fix;
            }

            t_in += dt;
            st.dt_min = std::min(st.dt_min, dt);
            ++substeps;
            ++st.substeps;
        }

        SpeciesPair state(Density(grid, sp[0].rho), Density(grid, sp[1].rho));
        StepRecord rec;
        rec.tau = snap;
        rec.energy = relative_energy_split(state, state, model);
        rec.entropy = entropy(state);
        rec.objective_initial = rec.objective_final = rec.energy.total();
        rec.inner_iters = substeps;
        out.steps.push_back(rec);
        out.states.push_back(std::move(state));
    }
    return out;
}

} // namespace crossdiff

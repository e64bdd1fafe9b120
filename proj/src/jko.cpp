#include "crossdiff/jko.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "crossdiff/errors.hpp"
#include "crossdiff/kernels.hpp"

namespace crossdiff {

namespace {

// Fraction of the base quantile slope every candidate must keep. A candidate
// that lost the full slope somewhere would carry an atom, and averaging an
// atom onto cells is discontinuous in the displacement; the floor keeps the
// objective continuous at the cost of bounding one-step compression by 1/this.
constexpr double kSlopeKeep = 0.05;

// ---------------------------------------------------------------------------
// Lagrangian frame of one species: the exact quantile function of the
// previous state as a knot polyline in the (mass, position) plane, plus the
// displacement node levels. A vacuum run appears as two knots with the same
// mass coordinate (a vertical jump). Everything here is built once per step.
// ---------------------------------------------------------------------------

struct Frame {
    int n_q = 0;
    double ds = 0.0;
    std::vector<double> knot_s, knot_x; // base quantile polyline, knot_s ascending to 1
    std::vector<double> node_s;         // displacement node levels (k + 1/2) / n_q
    std::vector<double> node_x;         // base quantile at the node levels
    std::vector<double> sigma;          // min base slope per node segment, size n_q - 1
    std::vector<double> lambda;         // cumulative slope offsets for the projection
};

Frame build_frame(const Density& rho, int n_q) {
    const Grid1D& g = rho.grid();
    const int n = g.n_cells;

    Frame f;
    f.n_q = n_q;
    f.ds = 1.0 / n_q;

    std::vector<double> cum(static_cast<size_t>(n) + 1, 0.0);
    for (int j = 0; j < n; ++j) cum[j + 1] = cum[j] + g.h * rho[j];
    const double total = cum[n];
    for (double& c : cum) c /= total;
    cum[n] = 1.0;

    f.knot_s.reserve(static_cast<size_t>(n) + 2);
    f.knot_x.reserve(static_cast<size_t>(n) + 2);
    for (int j = 0; j < n; ++j) {
        if (!(rho[j] > 0.0)) continue;
        if (f.knot_x.empty() || f.knot_x.back() < g.boundary(j)) {
            // support edge or a vacuum gap: start a new linear piece here
            f.knot_s.push_back(cum[j]);
            f.knot_x.push_back(g.boundary(j));
        }
        f.knot_s.push_back(cum[j + 1]);
        f.knot_x.push_back(g.boundary(j + 1));
    }
    // leading and trailing vacuum contributes exactly zero mass, so these are
    // already 0 and 1 up to the normalization rounding; pin them
    f.knot_s.front() = 0.0;
    f.knot_s.back() = 1.0;

    f.node_s.resize(static_cast<size_t>(n_q));
    for (int k = 0; k < n_q; ++k) f.node_s[k] = (k + 0.5) * f.ds;

    f.node_x.resize(static_cast<size_t>(n_q));
    {
        const int nk = static_cast<int>(f.knot_s.size());
        int seg = 0;
        for (int k = 0; k < n_q; ++k) {
            const double s = f.node_s[k];
            while (seg + 1 < nk && f.knot_s[seg + 1] < s) ++seg;
            const double width = f.knot_s[seg + 1] - f.knot_s[seg];
            f.node_x[k] =
                width > 0.0
                    ? f.knot_x[seg] +
                          (f.knot_x[seg + 1] - f.knot_x[seg]) * ((s - f.knot_s[seg]) / width)
                    : f.knot_x[seg];
        }
    }

    // Minimum base slope over each node segment limits how fast the
    // displacement may decrease there without folding the map. The slope of
    // the quantile across cell j is h / mass_j, so the binding cell is the
    // heaviest one overlapping the segment. Only a fraction of that slope is
    // released: the candidate keeps at least kSlopeKeep of the base slope
    // everywhere, so it can never concentrate mass into an atom, and the cell
    // averages stay continuous along the descent path.
    f.sigma.assign(static_cast<size_t>(n_q) - 1, std::numeric_limits<double>::infinity());
    int j = 0;
    for (int k = 0; k + 1 < n_q; ++k) {
        const double lo = f.node_s[k], hi = f.node_s[k + 1];
        while (j < n && cum[j + 1] <= lo) ++j;
        double max_mass = 0.0;
        for (int jj = j; jj < n && cum[jj] < hi; ++jj)
            max_mass = std::max(max_mass, cum[jj + 1] - cum[jj]);
        if (max_mass > 0.0) f.sigma[k] = g.h / max_mass;
    }

    f.lambda.resize(static_cast<size_t>(n_q), 0.0);
    for (int k = 0; k + 1 < n_q; ++k)
        f.lambda[k + 1] =
            f.lambda[k] +
            (std::isfinite(f.sigma[k]) ? (1.0 - kSlopeKeep) * f.ds * f.sigma[k] : 0.0);
    return f;
}

// Displacement value at mass level s when the next unprocessed node is k.
double displacement_at(const std::vector<double>& V, const std::vector<double>& node_s,
                       double ds, double s, int k) {
    const int m = static_cast<int>(V.size());
    if (k <= 0) return V.front();
    if (k >= m) return V.back();
    const double th = (s - node_s[k - 1]) / ds;
    return V[k - 1] + (V[k] - V[k - 1]) * th;
}

// Snapshot of the candidate measure: cell averages of the measure whose
// quantile is base + displacement, the preimage data at the cell boundaries
// that the kernel-energy gradient needs, and the candidate density as one
// constant piece per displacement-node interval. The diffusion energy
// integrates that profile, matching the resolution of the displacement
// itself. Evaluating it on the mesh cell averages instead lets the solver
// lower the averaged energy by piling mass against cell boundaries, a
// spurious gain of order h per step that never vanishes with the time step;
// resolving pieces below the node scale instead makes the energy curvature
// unbounded on thin slivers and the descent crawls.
struct Snapshot {
    std::vector<double> values; // cell averages, size n
    std::vector<double> s_hat;  // mass level hitting each boundary, size n + 1
    std::vector<double> sens;   // dG/db there (inverse quantile slope), 0 = skip
    std::vector<double> px;     // profile piece edges, strictly increasing
    std::vector<double> ps;     // mass level at each edge, ps.front()=0, back()=1
    std::vector<double> pd;     // density on (px[j], px[j+1])
};

struct MergeScratch {
    std::vector<double> s, p;
};

void take_snapshot(const Frame& f, const std::vector<double>& V, const Grid1D& g,
                   MergeScratch& w, Snapshot& out) {
    const int n = g.n_cells;
    const int nk = static_cast<int>(f.knot_s.size());

    // Merge base knots with displacement nodes into the candidate quantile
    // polyline P(s). Jumps stay as zero-width segments.
    w.s.clear();
    w.p.clear();
    w.s.reserve(static_cast<size_t>(nk + f.n_q + 2));
    w.p.reserve(static_cast<size_t>(nk + f.n_q + 2));
    w.s.push_back(0.0);
    w.p.push_back(f.knot_x.front() + V.front());
    int i = 0, k = 0;
    while (true) {
        const double sb = i + 1 < nk ? f.knot_s[i + 1] : 2.0;
        const double sn = k < f.n_q ? f.node_s[k] : 2.0;
        if (sb > 1.5 && sn > 1.5) break;
        if (sb <= sn) {
            ++i;
            const double s = f.knot_s[i];
            w.s.push_back(s);
            w.p.push_back(f.knot_x[i] + displacement_at(V, f.node_s, f.ds, s, k));
        } else {
            const double s = sn;
            const double width = f.knot_s[i + 1] - f.knot_s[i];
            const double q =
                width > 0.0
                    ? f.knot_x[i] + (f.knot_x[i + 1] - f.knot_x[i]) * ((s - f.knot_s[i]) / width)
                    : f.knot_x[i];
            w.s.push_back(s);
            w.p.push_back(q + V[k]);
            ++k;
        }
    }

    // The density profile: one piece per node interval, with the two rigid
    // tails of mass ds/2 closing the ends. Piece j has width px[j+1] - px[j]
    // and carries mass ps[j+1] - ps[j]. Vertices that fail to advance in
    // position (rounding ties at the margin floor) are folded into the
    // following piece, which keeps the edges strictly increasing and the
    // piece masses telescoping to 1.
    out.px.clear();
    out.ps.clear();
    out.pd.clear();
    out.px.reserve(static_cast<size_t>(f.n_q) + 2);
    out.ps.reserve(static_cast<size_t>(f.n_q) + 2);
    out.pd.reserve(static_cast<size_t>(f.n_q) + 2);
    out.px.push_back(f.knot_x.front() + V.front());
    out.ps.push_back(0.0);
    auto emit = [&out](double p, double s) {
        if (!(p > out.px.back())) return;
        out.pd.push_back((s - out.ps.back()) / (p - out.px.back()));
        out.px.push_back(p);
        out.ps.push_back(s);
    };
    for (int k = 0; k < f.n_q; ++k) emit(f.node_x[k] + V[k], f.node_s[k]);
    emit(f.knot_x.back() + V.back(), 1.0);
    if (out.ps.back() != 1.0) {
        // only reachable when the last vertices tied in position
        out.ps.back() = 1.0;
        if (!out.pd.empty())
            out.pd.back() =
                (1.0 - out.ps[out.ps.size() - 2]) / (out.px.back() - out.px[out.px.size() - 2]);
    }

    // Generalized inverse at the cell boundaries. Mass pushed past either end
    // of the interval lands in the outermost cell: the first and last levels
    // are pinned, which keeps the total exactly 1.
    out.s_hat.assign(static_cast<size_t>(n) + 1, 0.0);
    out.sens.assign(static_cast<size_t>(n) + 1, 0.0);
    out.s_hat[n] = 1.0;
    const int M = static_cast<int>(w.s.size());
    int seg = 0;
    for (int jb = 1; jb < n; ++jb) {
        const double b = g.boundary(jb);
        while (seg + 1 < M && w.p[seg + 1] <= b) ++seg;
        if (seg + 1 >= M) {
            out.s_hat[jb] = 1.0;
            continue;
        }
        if (w.p[seg] > b) {
            out.s_hat[jb] = w.s[seg]; // below the range of P, only possible at 0
            continue;
        }
        const double dsg = w.s[seg + 1] - w.s[seg];
        const double dpg = w.p[seg + 1] - w.p[seg];
        out.s_hat[jb] = w.s[seg] + (b - w.p[seg]) * (dsg / dpg);
        if (b == w.p[seg] && seg > 0) {
            // the boundary sits exactly on a knot of P (always the case at
            // zero displacement); average the two one-sided sensitivities so
            // the gradient stays mirror-symmetric
            const double dsl = w.s[seg] - w.s[seg - 1];
            const double dpl = w.p[seg] - w.p[seg - 1];
            out.sens[jb] = 0.5 * ((dpl > 0.0 ? dsl / dpl : 0.0) + dsg / dpg);
        } else {
            out.sens[jb] = dsg / dpg;
        }
    }
    for (int jb = 1; jb <= n; ++jb)
        if (out.s_hat[jb] < out.s_hat[jb - 1]) out.s_hat[jb] = out.s_hat[jb - 1];

    out.values.resize(static_cast<size_t>(n));
    for (int jc = 0; jc < n; ++jc)
        out.values[jc] = (out.s_hat[jc + 1] - out.s_hat[jc]) / g.h;
}

// Diffusion energy of two candidate profiles: both densities are piecewise
// constant, so the integral is a single sweep over the merged piece edges.
// Regions carrying neither species contribute A(0,0) = 0.
double diffusion_push(const DiffusionSpec& d, const Snapshot& s1, const Snapshot& s2) {
    const double inf = std::numeric_limits<double>::infinity();
    auto dens = [&inf](const Snapshot& s, size_t& i, double x, double& next) {
        const size_t m = s.pd.size();
        while (i < m && s.px[i + 1] <= x) ++i;
        if (i >= m) {
            next = inf;
            return 0.0;
        }
        if (s.px[i] > x) {
            next = s.px[i];
            return 0.0;
        }
        next = s.px[i + 1];
        return s.pd[i];
    };

    double x = std::min(s1.px.front(), s2.px.front());
    size_t i1 = 0, i2 = 0;
    double acc = 0.0;
    while (true) {
        double n1 = 0.0, n2 = 0.0;
        const double d1 = dens(s1, i1, x, n1);
        const double d2 = dens(s2, i2, x, n2);
        const double xr = std::min(n1, n2);
        if (xr == inf) break;
        if (d1 > 0.0 || d2 > 0.0) acc += (xr - x) * d.a_value(d1, d2);
        x = xr;
    }
    return acc;
}

// Exact integral of the squared piecewise-linear displacement over [0,1]
// (constant tails of width ds/2 at both ends).
double wq_value(const std::vector<double>& V, double ds) {
    const int m = static_cast<int>(V.size());
    double acc = 0.5 * ds * (V.front() * V.front() + V.back() * V.back());
    for (int k = 0; k + 1 < m; ++k)
        acc += ds / 3.0 * (V[k] * V[k] + V[k] * V[k + 1] + V[k + 1] * V[k + 1]);
    return acc;
}

void add_wq_gradient(const std::vector<double>& V, double ds, double coeff,
                     std::vector<double>& grad) {
    const int m = static_cast<int>(V.size());
    grad[0] += coeff * (ds * V[0] + ds / 3.0 * (2.0 * V[0] + V[1]));
    for (int k = 1; k + 1 < m; ++k)
        grad[k] += coeff * (ds / 3.0) * (V[k - 1] + 4.0 * V[k] + V[k + 1]);
    grad[m - 1] += coeff * (ds * V[m - 1] + ds / 3.0 * (V[m - 2] + 2.0 * V[m - 1]));
}

// Least-squares fit of a nondecreasing sequence (pool adjacent violators).
void isotonic_fit(std::vector<double>& w, std::vector<double>& val, std::vector<int>& cnt) {
    const int m = static_cast<int>(w.size());
    val.resize(static_cast<size_t>(m));
    cnt.resize(static_cast<size_t>(m));
    int top = 0;
    for (int i = 0; i < m; ++i) {
        val[top] = w[i];
        cnt[top] = 1;
        ++top;
        while (top > 1 && val[top - 2] >= val[top - 1]) {
            val[top - 2] =
                (val[top - 2] * cnt[top - 2] + val[top - 1] * cnt[top - 1]) /
                (cnt[top - 2] + cnt[top - 1]);
            cnt[top - 2] += cnt[top - 1];
            --top;
        }
    }
    int i = 0;
    for (int b = 0; b < top; ++b)
        for (int c = 0; c < cnt[b]; ++c) w[i++] = val[b];
}

struct Block {
    Frame frame;
    std::vector<double> V;
    Snapshot snap;
    std::vector<double> selfconv;  // H_i * mu_i at cell centers, tracks snap
    std::vector<double> crossconv; // K_i * nu_other^n, frozen for the step
    double wq = 0.0;
    double self_e = 0.0;
    double cross_e = 0.0;
    double gamma = 1.0; // persistent line-search relaxation

    // scratch
    std::vector<double> grad, dir, v_trial, selfconv_trial;
    Snapshot snap_trial;
};

class Stepper {
public:
    Stepper(const ModelSpec& model, const JkoConfig& cfg, const Grid1D& grid)
        : model_(model), cfg_(cfg), grid_(grid) {
        if (!(cfg_.tau > 0.0)) throw RangeError("jko: tau must be positive");
        if (!(cfg_.inner_tol > 0.0)) throw RangeError("jko: inner_tol must be positive");
        if (cfg_.max_inner_iters < 1) throw RangeError("jko: max_inner_iters must be >= 1");
        if (!(cfg_.step_shrink > 0.0 && cfg_.step_shrink < 1.0))
            throw RangeError("jko: step_shrink must lie in (0,1)");
        if (!(cfg_.step_grow >= 1.0)) throw RangeError("jko: step_grow must be >= 1");
        n_q_ = cfg_.n_q > 0 ? cfg_.n_q : default_n_q(grid_);
        if (n_q_ < grid_.n_cells)
            throw RangeError("jko: n_q must be at least the cell count");
        margin_ = cfg_.boundary_margin > 0.0 ? cfg_.boundary_margin : 5.0 * grid_.h;

        const PotentialSpec* hs[2] = {&model_.H1, &model_.H2};
        const PotentialSpec* ks[2] = {&model_.K1, &model_.K2};
        for (int i = 0; i < 2; ++i) {
            h_on_[i] = !hs[i]->zero;
            k_on_[i] = !ks[i]->zero;
            if (h_on_[i]) table_h_[i] = kernel_table(hs[i]->value, grid_);
            if (k_on_[i]) table_k_[i] = kernel_table(ks[i]->value, grid_);
        }
    }

    SpeciesPair step(const SpeciesPair& prev, StepRecord* record) {
        const int n = grid_.n_cells;
        const Density* prev_rho[2] = {&prev.rho1, &prev.rho2};

        for (int i = 0; i < 2; ++i) {
            Block& b = blk_[i];
            b.frame = build_frame(*prev_rho[i], n_q_);
            b.V.assign(static_cast<size_t>(n_q_), 0.0);
            b.gamma = 1.0;
            take_snapshot(b.frame, b.V, grid_, merge_, b.snap);
            b.wq = 0.0;
            // cross convolution against the frozen opposite species
            b.crossconv.assign(static_cast<size_t>(n), 0.0);
            if (k_on_[i])
                kernels::convolve(table_k_[i], prev_rho[1 - i]->values(), grid_.h, b.crossconv);
            refresh_derived(i);
        }
        double j_cur = total_objective();
        const double j_initial = j_cur;

        int sweeps = 0;
        bool moved_any = false;
        for (; sweeps < cfg_.max_inner_iters; ++sweeps) {
            const double j_sweep = j_cur;
            const bool a0 = descend_block(0, j_cur);
            const bool a1 = descend_block(1, j_cur);
            moved_any = moved_any || a0 || a1;
            if (!a0 && !a1) {
                check_stall(j_cur);
                break;
            }
            if (j_sweep - j_cur < cfg_.inner_tol) {
                ++sweeps;
                break;
            }
        }

        SpeciesPair next = moved_any
                               ? SpeciesPair(Density(grid_, blk_[0].snap.values),
                                             Density(grid_, blk_[1].snap.values))
                               : prev;

        for (int i = 0; i < 2; ++i) {
            const Density& rho = i == 0 ? next.rho1 : next.rho2;
            const double bm = boundary_mass(rho, margin_);
            if (bm > cfg_.boundary_tol)
                throw BoundaryEscape("jko: species " + std::to_string(i + 1) + " carries mass " +
                                     std::to_string(bm) + " within " + std::to_string(margin_) +
                                     " of the grid ends; enlarge the domain");
        }

        if (record) {
            record->tau = cfg_.tau;
            record->w2_sq = product_w2_sq(prev, next, n_q_);
            record->energy = relative_energy_split(next, prev, model_);
            record->entropy = entropy(next);
            record->objective_initial = j_initial;
            record->objective_final = j_cur;
            record->inner_iters = sweeps;
        }
        return next;
    }

private:
    // Rebuild the pieces of the objective owned by species i from its snapshot.
    void refresh_derived(int i) {
        Block& b = blk_[i];
        const int n = grid_.n_cells;
        if (h_on_[i]) {
            b.selfconv.resize(static_cast<size_t>(n));
            kernels::convolve(table_h_[i], b.snap.values, grid_.h, b.selfconv);
            b.self_e = 0.5 * grid_.h * kernels::block_sum(mul_scratch(b.snap.values, b.selfconv));
        } else {
            b.selfconv.assign(static_cast<size_t>(n), 0.0);
            b.self_e = 0.0;
        }
        b.cross_e = 0.0;
        if (k_on_[i]) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += b.crossconv[j] * b.snap.values[j];
            b.cross_e = grid_.h * acc;
        }
    }

    std::span<const double> mul_scratch(const std::vector<double>& a,
                                        const std::vector<double>& c) {
        mul_.resize(a.size());
        for (size_t j = 0; j < a.size(); ++j) mul_[j] = a[j] * c[j];
        return mul_;
    }

    double total_objective() const {
        const double diff = diffusion_push(model_.diffusion, blk_[0].snap, blk_[1].snap);
        return (blk_[0].wq + blk_[1].wq) / (2.0 * cfg_.tau) + diff + blk_[0].self_e +
               blk_[1].self_e + blk_[0].cross_e + blk_[1].cross_e;
    }

    // Spread a gradient coefficient at mass level s over the displacement nodes.
    void scatter_hat(double s, double w, const Frame& f, std::vector<double>& grad) const {
        if (s <= f.node_s.front()) {
            grad[0] += w;
        } else if (s >= f.node_s.back()) {
            grad[n_q_ - 1] += w;
        } else {
            const double u = s * n_q_ - 0.5;
            const int k = static_cast<int>(u);
            const double th = u - k;
            grad[k] += w * (1.0 - th);
            grad[k + 1] += w * th;
        }
    }

    // Objective gradient for species i at its current state.
    void gradient(int i) {
        Block& b = blk_[i];
        const int n = grid_.n_cells;

        b.grad.assign(static_cast<size_t>(n_q_), 0.0);
        add_wq_gradient(b.V, b.frame.ds, 1.0 / (2.0 * cfg_.tau), b.grad);
        add_diffusion_gradient(i);

        if (!h_on_[i] && !k_on_[i]) return;

        // marginal kernel-energy cost of mass in each cell
        u_.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) u_[j] = b.selfconv[j] + b.crossconv[j];

        // moving the preimage of boundary jb transfers mass between the
        // adjacent cells; chain rule through P(s_hat) = b
        for (int jb = 1; jb < n; ++jb) {
            const double sens = b.snap.sens[jb];
            const double sh = b.snap.s_hat[jb];
            if (!(sens > 0.0) || sh <= 0.0 || sh >= 1.0) continue;
            scatter_hat(sh, (u_[jb] - u_[jb - 1]) * sens, b.frame, b.grad);
        }
    }

    // Diffusion part of the gradient. The candidate density is piecewise
    // constant, so the energy differentiates into one boundary term per piece
    // edge (the integrand value swapping across the moving edge) plus one
    // density term per piece (the piece stretching). The frozen species'
    // profile enters through one-sided limits at the edges; an edge that ties
    // a frozen edge exactly takes the average of the two sides, which keeps
    // the first move of twin configurations symmetric.
    void add_diffusion_gradient(int i) {
        Block& b = blk_[i];
        const Block& o = blk_[1 - i];
        const DiffusionSpec& d = model_.diffusion;
        const std::vector<double>& px = b.snap.px;
        const std::vector<double>& ps = b.snap.ps;
        const std::vector<double>& pd = b.snap.pd;
        const std::vector<double>& qx = o.snap.px;
        const std::vector<double>& qd = o.snap.pd;
        const int m = static_cast<int>(pd.size());
        const int nq_pieces = static_cast<int>(qd.size());

        auto a_val = [&](double own, double oth) {
            return i == 0 ? d.a_value(own, oth) : d.a_value(oth, own);
        };
        auto a_der = [&](double own, double oth) {
            return i == 0 ? d.a_rho1(own, oth) : d.a_rho2(oth, own);
        };

        // per-piece integral of the density derivative against the frozen
        // profile, I_j = int a_der(pd[j], rho_other(x)) dx over piece j
        diffint_.assign(static_cast<size_t>(m), 0.0);
        int it = 0;
        for (int j = 0; j < m; ++j) {
            if (!(pd[j] > 0.0)) continue;
            double x = px[j];
            const double xe = px[j + 1];
            double acc = 0.0;
            while (x < xe) {
                while (it < nq_pieces && qx[it + 1] <= x) ++it;
                double dq, xr;
                if (it >= nq_pieces) {
                    dq = 0.0;
                    xr = xe;
                } else if (qx[it] > x) {
                    dq = 0.0;
                    xr = std::min(xe, qx[it]);
                } else {
                    dq = qd[it];
                    xr = std::min(xe, qx[it + 1]);
                }
                acc += (xr - x) * a_der(pd[j], dq);
                x = xr;
            }
            diffint_[j] = acc;
        }

        int iq = 0;
        for (int j = 0; j <= m; ++j) {
            const double x = px[j];
            // one-sided limits of the frozen profile at this edge
            while (iq < nq_pieces && qx[iq + 1] < x) ++iq;
            double dl = 0.0, dr = 0.0;
            if (iq < nq_pieces && qx[iq] < x && x <= qx[iq + 1]) dl = qd[iq];
            if (iq < nq_pieces) {
                if (qx[iq] <= x && x < qx[iq + 1]) dr = qd[iq];
                else if (x == qx[iq + 1] && iq + 1 < nq_pieces) dr = qd[iq + 1];
            }

            const double dprev = j > 0 ? pd[j - 1] : 0.0;
            const double dnext = j < m ? pd[j] : 0.0;
            double c = 0.5 * (a_val(dprev, dl) + a_val(dprev, dr)) -
                       0.5 * (a_val(dnext, dl) + a_val(dnext, dr));
            if (j < m && pd[j] > 0.0) c += diffint_[j] * pd[j] / (px[j + 1] - px[j]);
            if (j > 0 && pd[j - 1] > 0.0) c -= diffint_[j - 1] * pd[j - 1] / (px[j] - px[j - 1]);
            if (c != 0.0) scatter_hat(ps[j], c, b.frame, b.grad);
        }
    }

    // Newton direction on the smooth part of the objective. The metric mass
    // matrix and the per-piece diffusion stiffness are both tridiagonal in
    // the node displacements, so the system solves in one Thomas pass. The
    // kernel terms and the kinks where profile edges cross are left to the
    // line search.
    void build_direction(int i) {
        Block& b = blk_[i];
        const Block& o = blk_[1 - i];
        const DiffusionSpec& d = model_.diffusion;
        const double ds = b.frame.ds;
        const double wcoef = ds / (6.0 * cfg_.tau); // (ds/3) / (2 tau)

        hd_.assign(static_cast<size_t>(n_q_), 4.0 * wcoef);
        hu_.assign(static_cast<size_t>(n_q_) - 1, wcoef);
        hd_[0] = hd_[n_q_ - 1] = 5.0 * wcoef;

        const std::vector<double>& px = b.snap.px;
        const std::vector<double>& ps = b.snap.ps;
        const std::vector<double>& pd = b.snap.pd;
        const std::vector<double>& qx = o.snap.px;
        const std::vector<double>& qd = o.snap.pd;
        const int m = static_cast<int>(pd.size());
        const int no = static_cast<int>(qd.size());

        auto node_of = [&](double s) {
            if (s <= b.frame.node_s.front()) return 0;
            if (s >= b.frame.node_s.back()) return n_q_ - 1;
            return static_cast<int>(std::llround(s * n_q_ - 0.5));
        };

        int it = 0;
        for (int j = 0; j < m; ++j) {
            if (!(pd[j] > 0.0)) continue;
            const int kl = node_of(ps[j]);
            const int kr = node_of(ps[j + 1]);
            if (kl == kr) continue; // rigid tail piece, no stiffness in V
            const double w = px[j + 1] - px[j];
            const double xm = 0.5 * (px[j] + px[j + 1]);
            while (it < no && qx[it + 1] < xm) ++it;
            const double oth = (it < no && qx[it] <= xm) ? qd[it] : 0.0;
            double a11, a12, a22;
            d.a_hessian(i == 0 ? std::max(pd[j], 1e-12) : std::max(oth, 1e-12),
                        i == 0 ? std::max(oth, 1e-12) : std::max(pd[j], 1e-12), a11, a12, a22);
            const double curv_rho = i == 0 ? a11 : a22;
            if (!std::isfinite(curv_rho) || curv_rho <= 0.0) continue;
            const double c = pd[j] * pd[j] / w * curv_rho;
            hd_[kl] += c;
            hd_[kr] += c;
            if (kr == kl + 1) hu_[kl] -= c; // collapsed vertices leave a gap; keep it SPD
        }

        // Thomas solve H dir = grad (symmetric positive definite)
        b.dir.resize(static_cast<size_t>(n_q_));
        tm_.resize(static_cast<size_t>(n_q_));
        double piv = hd_[0];
        b.dir[0] = b.grad[0] / piv;
        for (int k = 1; k < n_q_; ++k) {
            tm_[k] = hu_[k - 1] / piv;
            piv = hd_[k] - hu_[k - 1] * tm_[k];
            b.dir[k] = (b.grad[k] - hu_[k - 1] * b.dir[k - 1]) / piv;
        }
        for (int k = n_q_ - 2; k >= 0; --k) b.dir[k] -= tm_[k + 1] * b.dir[k + 1];
    }

    // Pull the trial displacement back into the monotone cone.
    void project(const Frame& f, std::vector<double>& v) {
        for (int k = 0; k < n_q_; ++k) v[k] += f.lambda[k];
        isotonic_fit(v, pav_val_, pav_cnt_);
        for (int k = 0; k < n_q_; ++k) v[k] -= f.lambda[k];
    }

    // Objective of species i displaced to v_trial, with the results left in
    // the trial buffers so an accept is a set of swaps.
    double evaluate_trial(int i) {
        Block& b = blk_[i];
        take_snapshot(b.frame, b.v_trial, grid_, merge_, b.snap_trial);
        wq_t_ = wq_value(b.v_trial, b.frame.ds);
        diff_t_ = i == 0 ? diffusion_push(model_.diffusion, b.snap_trial, blk_[1].snap)
                         : diffusion_push(model_.diffusion, blk_[0].snap, b.snap_trial);
        self_t_ = 0.0;
        if (h_on_[i]) {
            b.selfconv_trial.resize(b.snap_trial.values.size());
            kernels::convolve(table_h_[i], b.snap_trial.values, grid_.h, b.selfconv_trial);
            self_t_ = 0.5 * grid_.h *
                      kernels::block_sum(mul_scratch(b.snap_trial.values, b.selfconv_trial));
        }
        cross_t_ = 0.0;
        if (k_on_[i]) {
            double acc = 0.0;
            for (int j = 0; j < grid_.n_cells; ++j) acc += b.crossconv[j] * b.snap_trial.values[j];
            cross_t_ = grid_.h * acc;
        }
        return (wq_t_ + blk_[1 - i].wq) / (2.0 * cfg_.tau) + diff_t_ + self_t_ +
               blk_[1 - i].self_e + cross_t_ + blk_[1 - i].cross_e;
    }

    void accept_trial(int i) {
        Block& b = blk_[i];
        b.V.swap(b.v_trial);
        b.snap.values.swap(b.snap_trial.values);
        b.snap.s_hat.swap(b.snap_trial.s_hat);
        b.snap.sens.swap(b.snap_trial.sens);
        b.snap.px.swap(b.snap_trial.px);
        b.snap.ps.swap(b.snap_trial.ps);
        b.snap.pd.swap(b.snap_trial.pd);
        b.wq = wq_t_;
        b.self_e = self_t_;
        b.cross_e = cross_t_;
        if (h_on_[i]) b.selfconv.swap(b.selfconv_trial);
    }

    // One projected line search along the preconditioned gradient: backtrack
    // to the first decrease, then keep extending the step while that helps.
    // Returns whether the objective decreased.
    bool descend_block(int i, double& j_cur) {
        Block& b = blk_[i];
        gradient(i);
        build_direction(i);

        double dmax = 0.0;
        for (int k = 0; k < n_q_; ++k) dmax = std::max(dmax, std::abs(b.dir[k]));
        if (dmax == 0.0) return false;

        // Trust cap: never displace more than two cells in one search. Large
        // transients are walked in bounded increments instead of overshooting
        // into heavily pooled (and badly conditioned) configurations.
        const double g_cap = 2.0 * grid_.h / dmax;

        v_base_ = b.V;
        double g = std::min(b.gamma, g_cap);
        bool improved = false;
        for (int evals = 0; evals < 220; ++evals) {
            b.v_trial.resize(static_cast<size_t>(n_q_));
            for (int k = 0; k < n_q_; ++k) b.v_trial[k] = v_base_[k] - g * b.dir[k];
            project(b.frame, b.v_trial);
            const double j_trial = evaluate_trial(i);

            if (j_trial < j_cur) {
                accept_trial(i);
                j_cur = j_trial;
                improved = true;
                if (g >= g_cap) break;
                g = std::min(g * cfg_.step_grow, g_cap);
                continue;
            }
            if (improved) break; // extending stopped paying off
            g *= cfg_.step_shrink;
            if (g < 1e-14) break;
        }
        if (improved) b.gamma = std::min(g, 1e6);
        return improved;
    }

    // Both blocks failed their searches. Converged if the projected gradient
    // model cannot promise a decrease beyond roundoff; otherwise give up.
    void check_stall(double j_cur) {
        double promised = 0.0;
        for (int i = 0; i < 2; ++i) {
            Block& b = blk_[i];
            if (b.dir.empty()) continue;
            const double g = 1e-8;
            b.v_trial.resize(static_cast<size_t>(n_q_));
            for (int k = 0; k < n_q_; ++k) b.v_trial[k] = b.V[k] - g * b.dir[k];
            project(b.frame, b.v_trial);
            double acc = 0.0;
            for (int k = 0; k < n_q_; ++k) acc += b.grad[k] * (b.V[k] - b.v_trial[k]);
            promised = std::max(promised, acc / g);
        }
        const double noise = 1e-10 * (1.0 + std::abs(j_cur));
        if (promised * 1e-8 > std::max(1e-12, noise))
            throw InnerSolverStalled(
                "jko: line search found no decrease although the projected gradient predicts " +
                std::to_string(promised * 1e-8));
    }

    const ModelSpec& model_;
    JkoConfig cfg_;
    Grid1D grid_;
    int n_q_ = 0;
    double margin_ = 0.0;
    bool h_on_[2] = {false, false}, k_on_[2] = {false, false};
    std::vector<double> table_h_[2], table_k_[2];

    Block blk_[2];
    MergeScratch merge_;
    std::vector<double> u_, mul_, pav_val_, v_base_, diffint_, hd_, hu_, tm_;
    std::vector<int> pav_cnt_;
    double wq_t_ = 0.0, diff_t_ = 0.0, self_t_ = 0.0, cross_t_ = 0.0;
};

} // namespace

SpeciesPair jko_step(const SpeciesPair& prev, const ModelSpec& model, const JkoConfig& cfg,
                     StepRecord* record) {
    Stepper stepper(model, cfg, prev.grid());
    return stepper.step(prev, record);
}

Trajectory run_scheme(const SpeciesPair& initial, const ModelSpec& model, const JkoConfig& cfg,
                      double horizon, Trajectory* progress) {
    const int n_steps = static_cast<int>(std::floor(horizon / cfg.tau + 1e-9));
    if (n_steps < 1)
        throw TooFewSteps("run_scheme: horizon " + std::to_string(horizon) +
                          " is shorter than one step of " + std::to_string(cfg.tau));

    Trajectory local;
    Trajectory& traj = progress ? *progress : local;
    traj = Trajectory{};
    traj.grid = initial.grid();
    traj.tau = cfg.tau;
    traj.states.reserve(static_cast<size_t>(n_steps) + 1);
    traj.steps.reserve(static_cast<size_t>(n_steps));
    traj.states.push_back(initial);

    Stepper stepper(model, cfg, initial.grid());
    for (int k = 0; k < n_steps; ++k) {
        StepRecord rec;
        traj.states.push_back(stepper.step(traj.states.back(), &rec));
        traj.steps.push_back(rec);
    }
    return std::move(traj);
}

int Trajectory::index_at(double t) const {
    if (t < -1e-12) throw OutOfRange("trajectory: negative time");
    int idx = static_cast<int>(std::ceil(t / tau - 1e-9));
    if (idx < 0) idx = 0;
    if (idx >= static_cast<int>(states.size()))
        throw OutOfRange("trajectory: time " + std::to_string(t) + " beyond the horizon " +
                         std::to_string(final_time()));
    return idx;
}

} // namespace crossdiff

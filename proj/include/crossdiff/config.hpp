#pragma once

#include <map>
#include <string>
#include <vector>

#include "crossdiff/diagnostics.hpp"
#include "crossdiff/fv.hpp"
#include "crossdiff/jko.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/presets.hpp"

namespace crossdiff {

// ---------------------------------------------------------------------------
// Run configuration. One struct per JSON block; parse_config fills defaults,
// validates every numeric range, and resolves the model once so an invalid
// preset or parameter never survives into a run. serialize_config emits the
// fully materialized document, and parse(serialize(c)) == c exactly.
// ---------------------------------------------------------------------------

struct GridConfig {
    double x_min = -2.0;
    double x_max = 2.0;
    int n_cells = 256;

    bool operator==(const GridConfig&) const = default;
};

struct TimeConfig {
    double tau = 1e-3;
    double horizon = 0.1;

    bool operator==(const TimeConfig&) const = default;
};

/// One interaction kernel. Forms: "zero", "quadratic" (c), "gaussian"
/// (amp, sigma), "raw_gaussian" (amp, sigma), "abs".
struct KernelConfig {
    std::string form = "zero";
    std::map<std::string, double> params;

    bool operator==(const KernelConfig&) const = default;
};

/// Diffusion selected by family name. Families: "decoupled" (a, b, m1, m2),
/// "example1" (a, b, m1, m2), "example2" (a, b), "example3" (a, b, m, R),
/// "sum_square", "zero", and "polynomial" (m1, m2, alpha1, alpha2,
/// coercivity, lower_bound plus a term table in the power variables).
struct DiffusionConfig {
    std::string family = "decoupled";
    std::map<std::string, double> params;
    std::vector<presets::PolyTerm> terms;

    bool operator==(const DiffusionConfig&) const = default;
};

/// Model block: a named preset with numeric parameters, or preset "custom"
/// with an explicit diffusion family and per-slot kernels. Presets:
/// "zero", "decoupled_pme" (a), "coupled_example1",
/// "attraction" (amp1, sigma1, amp2, sigma2), "custom".
struct ModelConfig {
    std::string preset = "decoupled_pme";
    std::map<std::string, double> params;
    DiffusionConfig diffusion;
    std::map<std::string, KernelConfig> kernels; // keys self1, self2, cross1, cross2

    bool operator==(const ModelConfig&) const = default;
};

/// Initial profile of one species. Shapes: "gaussian" (center, sigma),
/// "uniform" (a, b), "triangle" (center, halfwidth), "barenblatt" (t0).
struct InitialConfig {
    std::string shape = "gaussian";
    std::map<std::string, double> params;

    bool operator==(const InitialConfig&) const = default;
};

/// Diagnostics block. `checks` limits which entries count toward the verdict
/// (empty = all); `calibrated` = false demotes the fitted-constant checks
/// (holder_continuity, growth_norm_bound, entropy_bounds) to informational,
/// for runs outside the regime the constants were calibrated on.
struct DiagnosticsBlock {
    bool enabled = true;
    bool calibrated = true;
    std::vector<std::string> checks;
    double s_max = 1e-4;
    int n_heat_steps = 5;
    int holder_pairs = 64;
    double rel_slack = 1e-3;

    bool operator==(const DiagnosticsBlock&) const = default;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats = {"csv", "json"};

    bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
    GridConfig grid;
    TimeConfig time;
    ModelConfig model;
    InitialConfig initial1;
    InitialConfig initial2;
    JkoConfig solver;       // solver.tau mirrors time.tau; not serialized
    DiagnosticsBlock diagnostics;
    FvConfig fv;
    OutputConfig output;

    bool operator==(const RunConfig&) const = default;
};

/// Parse and validate a JSON config document. Unknown keys, wrong types and
/// malformed JSON raise SchemaError with the offending path (or line/column);
/// out-of-range values raise RangeError naming the key and the allowed range.
RunConfig parse_config(const std::string& text);

/// The fully materialized document, all defaults filled in.
std::string serialize_config(const RunConfig& cfg);

// --- builders from validated blocks ---
Grid1D build_grid(const GridConfig& g);
ModelSpec build_model(const ModelConfig& m);
Density build_density(const InitialConfig& init, const Grid1D& grid);
JkoConfig jko_config(const RunConfig& cfg);
DiagnosticsConfig diagnostics_config(const RunConfig& cfg);

/// Names accepted in diagnostics.checks, in report order.
const std::vector<std::string>& known_check_names();

} // namespace crossdiff

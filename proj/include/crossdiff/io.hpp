#pragma once

#include <filesystem>

#include "crossdiff/config.hpp"
#include "crossdiff/diagnostics.hpp"
#include "crossdiff/jko.hpp"

namespace crossdiff {

// ---------------------------------------------------------------------------
// Run persistence. A run directory contains densities.csv (long format:
// t,x,rho1,rho2), energies.csv (one row per state), steps.csv (one row per
// accepted step), diagnostics.json when diagnostics ran, and manifest.json.
// Every float is written with 17 significant digits, so reading a directory
// back reproduces the run bit for bit, and rerunning the manifest's config
// rewrites byte-identical CSVs.
// ---------------------------------------------------------------------------

/// Output root: $CROSSDIFF_OUTPUT_ROOT when set and nonempty, else the
/// current directory. The run directory is root / out.directory.
std::filesystem::path resolve_output_dir(const OutputConfig& out);

void write_densities_csv(const std::filesystem::path& file, const Trajectory& traj);
void write_energies_csv(const std::filesystem::path& file, const Trajectory& traj,
                        const ModelSpec& model);
void write_steps_csv(const std::filesystem::path& file, const Trajectory& traj);
void write_diagnostics_json(const std::filesystem::path& file,
                            const DiagnosticsReport& report);

/// Write the selected formats plus manifest.json. `complete` records whether
/// the trajectory reached the configured horizon; a partial flush after a
/// solver failure writes the same files with complete = false, so the
/// directory stays loadable.
void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& cfg,
                         const Trajectory& traj, const ModelSpec& model,
                         const DiagnosticsReport* report, bool complete);

struct StoredRun {
    RunConfig config;
    Trajectory trajectory;
    bool complete = true;
};

/// Reload a run directory: config from the manifest, states from
/// densities.csv, step records from steps.csv joined with energies.csv.
/// Throws IoError on missing files or rows that do not match the config.
StoredRun read_run(const std::filesystem::path& dir);

} // namespace crossdiff

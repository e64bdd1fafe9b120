#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crossdiff/config.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/io.hpp"
#include "crossdiff/jko.hpp"

using namespace crossdiff;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / ("crossdiff_io_" + leaf);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig small_config() {
    return parse_config(R"({
        "grid": {"x_min": -3.0, "x_max": 3.0, "n_cells": 48},
        "time": {"tau": 2e-3, "horizon": 0.01},
        "model": {"preset": "coupled_example1"},
        "initial": {"rho1": {"shape": "gaussian", "center": -0.3, "sigma": 0.25},
                    "rho2": {"shape": "gaussian", "center": 0.3, "sigma": 0.3}},
        "output": {"directory": "run"}
    })");
}

Trajectory run_from(const RunConfig& cfg) {
    const Grid1D g = build_grid(cfg.grid);
    SpeciesPair init{build_density(cfg.initial1, g), build_density(cfg.initial2, g)};
    return run_scheme(init, build_model(cfg.model), jko_config(cfg), cfg.time.horizon);
}

} // namespace

TEST_CASE("run directory round-trips exactly") {
    const RunConfig cfg = small_config();
    const Trajectory traj = run_from(cfg);
    const ModelSpec model = build_model(cfg.model);
    const DiagnosticsReport report = run_diagnostics(traj, model, diagnostics_config(cfg));

    const fs::path dir = fresh_dir("roundtrip");
    write_run_artifacts(dir, cfg, traj, model, &report, true);

    const StoredRun loaded = read_run(dir);
    CHECK(loaded.complete);
    CHECK(loaded.config == cfg);
    REQUIRE(loaded.trajectory.states.size() == traj.states.size());
    REQUIRE(loaded.trajectory.steps.size() == traj.steps.size());
    for (size_t k = 0; k < traj.states.size(); ++k)
        for (int j = 0; j < traj.grid.n_cells; ++j) {
            CHECK(loaded.trajectory.states[k].rho1[j] == traj.states[k].rho1[j]);
            CHECK(loaded.trajectory.states[k].rho2[j] == traj.states[k].rho2[j]);
        }
    for (size_t k = 0; k < traj.steps.size(); ++k) {
        CHECK(loaded.trajectory.steps[k].w2_sq == traj.steps[k].w2_sq);
        CHECK(loaded.trajectory.steps[k].objective_final == traj.steps[k].objective_final);
        CHECK(loaded.trajectory.steps[k].energy.diffusion == traj.steps[k].energy.diffusion);
        CHECK(loaded.trajectory.steps[k].entropy == traj.steps[k].entropy);
        CHECK(loaded.trajectory.steps[k].inner_iters == traj.steps[k].inner_iters);
    }

    // diagnostics on the loaded run reproduce the originals exactly: every
    // input they consume made it through the 17-digit format unchanged
    const DiagnosticsReport again =
        run_diagnostics(loaded.trajectory, model, diagnostics_config(loaded.config));
    REQUIRE(again.entries.size() == report.entries.size());
    for (size_t i = 0; i < report.entries.size(); ++i) {
        CHECK(again.entries[i].pass == report.entries[i].pass);
        CHECK(again.entries[i].slack == report.entries[i].slack);
    }
}

TEST_CASE("rerunning the manifest config rewrites identical bytes") {
    const RunConfig cfg = small_config();
    const fs::path first = fresh_dir("repro_a");
    write_run_artifacts(first, cfg, run_from(cfg), build_model(cfg.model), nullptr, true);

    const StoredRun loaded = read_run(first);
    const fs::path second = fresh_dir("repro_b");
    write_run_artifacts(second, loaded.config, run_from(loaded.config),
                        build_model(loaded.config.model), nullptr, true);

    for (const char* name : {"densities.csv", "energies.csv", "steps.csv", "manifest.json"})
        CHECK(slurp(first / name) == slurp(second / name));
}

TEST_CASE("manifest records formats and completeness") {
    RunConfig cfg = small_config();
    cfg.output.formats = {"csv"};
    const Trajectory traj = run_from(cfg);
    const fs::path dir = fresh_dir("manifest");
    write_run_artifacts(dir, cfg, traj, build_model(cfg.model), nullptr, false);

    CHECK_FALSE(fs::exists(dir / "diagnostics.json"));
    CHECK(fs::exists(dir / "densities.csv"));
    const std::string manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("\"complete\": false") != std::string::npos);
    CHECK(manifest.find("steps.csv") != std::string::npos);

    const StoredRun loaded = read_run(dir);
    CHECK_FALSE(loaded.complete);
    CHECK(loaded.config.output.formats == std::vector<std::string>{"csv"});
}

TEST_CASE("diagnostics report serializes with entries and verdict") {
    const RunConfig cfg = small_config();
    const Trajectory traj = run_from(cfg);
    const ModelSpec model = build_model(cfg.model);
    const DiagnosticsReport report = run_diagnostics(traj, model, diagnostics_config(cfg));

    const fs::path dir = fresh_dir("diag");
    fs::create_directories(dir);
    write_diagnostics_json(dir / "diagnostics.json", report);
    const std::string text = slurp(dir / "diagnostics.json");
    CHECK(text.find("\"all_pass\"") != std::string::npos);
    CHECK(text.find("one_step_descent") != std::string::npos);
    CHECK(text.find("strengthened_dissipation") != std::string::npos);
    CHECK(text.find("\"slack\"") != std::string::npos);
}

TEST_CASE("a run with zero steps still persists") {
    const RunConfig cfg = small_config();
    const Grid1D g = build_grid(cfg.grid);
    Trajectory traj;
    traj.grid = g;
    traj.tau = cfg.time.tau;
    traj.states.push_back(
        SpeciesPair{build_density(cfg.initial1, g), build_density(cfg.initial2, g)});
    REQUIRE(traj.steps.empty());

    const fs::path dir = fresh_dir("zerosteps");
    write_run_artifacts(dir, cfg, traj, build_model(cfg.model), nullptr, true);
    const StoredRun loaded = read_run(dir);
    CHECK(loaded.trajectory.states.size() == 1);
    CHECK(loaded.trajectory.steps.empty());
}

TEST_CASE("read errors carry the offending file") {
    CHECK_THROWS_AS(read_run(fs::temp_directory_path() / "crossdiff_io_nonesuch"), IoError);

    const RunConfig cfg = small_config();
    const fs::path dir = fresh_dir("tamper");
    write_run_artifacts(dir, cfg, run_from(cfg), build_model(cfg.model), nullptr, true);

    // truncate densities mid-state: row count no longer a multiple of n_cells
    std::string text = slurp(dir / "densities.csv");
    text.resize(text.size() - 2);
    std::ofstream(dir / "densities.csv", std::ios::binary) << text;
    CHECK_THROWS_AS(read_run(dir), IoError);

    // header drift is refused rather than guessed at
    std::ofstream(dir / "densities.csv", std::ios::binary) << "time,x,rho1,rho2\n";
    try {
        read_run(dir);
        CHECK(false);
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("densities.csv") != std::string::npos);
    }
}

TEST_CASE("output root env override") {
    RunConfig cfg = small_config();
    cfg.output.directory = "nested/run";

    ::unsetenv("CROSSDIFF_OUTPUT_ROOT");
    CHECK(resolve_output_dir(cfg.output) == fs::current_path() / "nested/run");

    const fs::path root = fresh_dir("envroot");
    ::setenv("CROSSDIFF_OUTPUT_ROOT", root.c_str(), 1);
    CHECK(resolve_output_dir(cfg.output) == root / "nested/run");
    ::unsetenv("CROSSDIFF_OUTPUT_ROOT");
}

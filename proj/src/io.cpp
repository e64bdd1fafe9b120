#include "crossdiff/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crossdiff/errors.hpp"

namespace crossdiff {

namespace {

using json = nlohmann::json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    return in;
}

// One CSV line split on commas; no quoting, none of our fields need it.
std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

double to_double(const std::string& s, const std::filesystem::path& file) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw IoError(file.string() + ": malformed number '" + s + "'");
    return v;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file,
                                               const std::string& header) {
    std::ifstream in = open_in(file);
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw IoError(file.string() + ": expected header '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(split_row(line));
    }
    return rows;
}

} // namespace

std::filesystem::path resolve_output_dir(const OutputConfig& out) {
    std::filesystem::path root = std::filesystem::current_path();
    if (const char* env = std::getenv("CROSSDIFF_OUTPUT_ROOT"); env && *env)
        root = env;
    return root / out.directory;
}

void write_densities_csv(const std::filesystem::path& file, const Trajectory& traj) {
    std::ofstream out = open_out(file);
    out << "t,x,rho1,rho2\n";
    for (size_t k = 0; k < traj.states.size(); ++k) {
        const std::string t = fmt17(traj.tau * static_cast<double>(k));
        const SpeciesPair& pair = traj.states[k];
        for (int j = 0; j < traj.grid.n_cells; ++j) {
            out << t << ',' << fmt17(traj.grid.center(j)) << ',' << fmt17(pair.rho1[j])
                << ',' << fmt17(pair.rho2[j]) << '\n';
        }
    }
}

void write_energies_csv(const std::filesystem::path& file, const Trajectory& traj,
                        const ModelSpec& model) {
    std::ofstream out = open_out(file);
    out << "t,F_tilde,diffusion,self1,self2,cross1,cross2,entropy,m2_total,w2_step_sq\n";
    for (size_t k = 0; k < traj.states.size(); ++k) {
        // row 0 evaluates the initial pair against itself; later rows reuse
        // the stepper's records so the file matches what the dissipation
        // checks actually consumed
        const EnergySplit split =
            k == 0 ? relative_energy_split(traj.states[0], traj.states[0], model)
                   : traj.steps[k - 1].energy;
        const double ent = k == 0 ? entropy(traj.states[0]) : traj.steps[k - 1].entropy;
        const double w2 = k == 0 ? 0.0 : traj.steps[k - 1].w2_sq;
        const SpeciesPair& pair = traj.states[k];
        const double m2 = second_moment(pair.rho1) + second_moment(pair.rho2);
        out << fmt17(traj.tau * static_cast<double>(k)) << ',' << fmt17(split.f_tilde())
            << ',' << fmt17(split.diffusion) << ',' << fmt17(split.self1) << ','
            << fmt17(split.self2) << ',' << fmt17(split.cross1) << ','
            << fmt17(split.cross2) << ',' << fmt17(ent) << ',' << fmt17(m2) << ','
            << fmt17(w2) << '\n';
    }
}

void write_steps_csv(const std::filesystem::path& file, const Trajectory& traj) {
    std::ofstream out = open_out(file);
    out << "k,t,tau,w2_sq,objective_initial,objective_final,inner_iters\n";
    for (size_t k = 0; k < traj.steps.size(); ++k) {
        const StepRecord& r = traj.steps[k];
        out << k << ',' << fmt17(traj.tau * static_cast<double>(k + 1)) << ','
            << fmt17(r.tau) << ',' << fmt17(r.w2_sq) << ',' << fmt17(r.objective_initial)
            << ',' << fmt17(r.objective_final) << ',' << r.inner_iters << '\n';
    }
}

void write_diagnostics_json(const std::filesystem::path& file,
                            const DiagnosticsReport& report) {
    json entries = json::array();
    for (const DiagnosticEntry& e : report.entries) {
        json fitted = json::object();
        for (const auto& [key, value] : e.fitted) fitted[key] = value;
        entries.push_back({{"name", e.name},
                           {"pass", e.pass},
                           {"informational", e.informational},
                           {"slack", e.slack},
                           {"witness", e.witness},
                           {"fitted", fitted}});
    }
    const json doc = {{"all_pass", report.all_pass()}, {"entries", entries}};
    open_out(file) << doc.dump(2) << '\n';
}

void write_run_artifacts(const std::filesystem::path& dir, const RunConfig& cfg,
                         const Trajectory& traj, const ModelSpec& model,
                         const DiagnosticsReport* report, bool complete) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    const auto wants = [&](const char* fmt) {
        for (const std::string& f : cfg.output.formats)
            if (f == fmt) return true;
        return false;
    };
    if (wants("csv")) {
        write_densities_csv(dir / "densities.csv", traj);
        write_energies_csv(dir / "energies.csv", traj, model);
        write_steps_csv(dir / "steps.csv", traj);
        files.insert(files.end(), {"densities.csv", "energies.csv", "steps.csv"});
    }
    if (wants("json") && report) {
        write_diagnostics_json(dir / "diagnostics.json", *report);
        files.push_back("diagnostics.json");
    }

    const json manifest = {{"complete", complete},
                           {"n_states", traj.states.size()},
                           {"files", files},
                           {"config", json::parse(serialize_config(cfg))}};
    open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
}

StoredRun read_run(const std::filesystem::path& dir) {
    json manifest;
    try {
        std::ifstream in = open_in(dir / "manifest.json");
        manifest = json::parse(std::string(std::istreambuf_iterator<char>(in),
                                           std::istreambuf_iterator<char>()));
    } catch (const json::parse_error&) {
        throw IoError((dir / "manifest.json").string() + ": malformed JSON");
    }
    if (!manifest.is_object() || !manifest.contains("config"))
        throw IoError((dir / "manifest.json").string() + ": missing config");

    StoredRun run;
    run.config = parse_config(manifest["config"].dump());
    run.complete = manifest.value("complete", true);

    const Grid1D grid = build_grid(run.config.grid);
    run.trajectory.grid = grid;
    run.trajectory.tau = run.config.time.tau;

    const auto densities = read_csv(dir / "densities.csv", "t,x,rho1,rho2");
    const size_t n = static_cast<size_t>(grid.n_cells);
    if (densities.empty() || densities.size() % n != 0)
        throw IoError((dir / "densities.csv").string() +
                      ": row count is not a multiple of n_cells");
    std::vector<double> r1(n), r2(n);
    for (size_t row = 0; row < densities.size(); ++row) {
        if (densities[row].size() != 4)
            throw IoError((dir / "densities.csv").string() + ": expected 4 columns");
        const size_t j = row % n;
        const double x = to_double(densities[row][1], dir / "densities.csv");
        if (std::abs(x - grid.center(static_cast<int>(j))) > 1e-12 * (1.0 + std::abs(x)))
            throw IoError((dir / "densities.csv").string() +
                          ": cell centers do not match the configured grid");
        r1[j] = to_double(densities[row][2], dir / "densities.csv");
        r2[j] = to_double(densities[row][3], dir / "densities.csv");
        if (j + 1 == n)
            run.trajectory.states.emplace_back(Density(grid, r1), Density(grid, r2));
    }

    const auto steps =
        read_csv(dir / "steps.csv", "k,t,tau,w2_sq,objective_initial,objective_final,inner_iters");
    const auto energies = read_csv(
        dir / "energies.csv",
        "t,F_tilde,diffusion,self1,self2,cross1,cross2,entropy,m2_total,w2_step_sq");
    if (steps.size() + 1 != run.trajectory.states.size())
        throw IoError((dir / "steps.csv").string() + ": expected one row per step");
    if (energies.size() != run.trajectory.states.size())
        throw IoError((dir / "energies.csv").string() + ": expected one row per state");

    for (size_t k = 0; k < steps.size(); ++k) {
        const auto& srow = steps[k];
        const auto& erow = energies[k + 1];
        if (srow.size() != 7)
            throw IoError((dir / "steps.csv").string() + ": expected 7 columns");
        if (erow.size() != 10)
            throw IoError((dir / "energies.csv").string() + ": expected 10 columns");
        StepRecord r;
        r.tau = to_double(srow[2], dir / "steps.csv");
        r.w2_sq = to_double(srow[3], dir / "steps.csv");
        r.objective_initial = to_double(srow[4], dir / "steps.csv");
        r.objective_final = to_double(srow[5], dir / "steps.csv");
        r.inner_iters = static_cast<int>(to_double(srow[6], dir / "steps.csv"));
        r.energy.diffusion = to_double(erow[2], dir / "energies.csv");
        r.energy.self1 = to_double(erow[3], dir / "energies.csv");
        r.energy.self2 = to_double(erow[4], dir / "energies.csv");
        r.energy.cross1 = to_double(erow[5], dir / "energies.csv");
        r.energy.cross2 = to_double(erow[6], dir / "energies.csv");
        r.entropy = to_double(erow[7], dir / "energies.csv");
        run.trajectory.steps.push_back(r);
    }
    return run;
}

} // namespace crossdiff

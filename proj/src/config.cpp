#include "crossdiff/config.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "crossdiff/errors.hpp"

namespace crossdiff {

namespace {

using json = nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

[[noreturn]] void fail_schema(const std::string& path, const std::string& what) {
    throw SchemaError("config: " + path + ": " + what);
}

void require(bool ok, const std::string& path, const std::string& what) {
    if (!ok) throw RangeError("config: " + path + ": " + what);
}

// Tracks which keys a block reader consumed, so leftovers (typos, stray
// settings) fail loudly instead of being silently ignored.
class Block {
  public:
    Block(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) fail_schema(path_, "expected an object");
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void done() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) fail_schema(join(path_, it.key()), "unknown key");
    }

    // Remaining keys interpreted as a flat numeric parameter map.
    std::map<std::string, double> take_params() {
        std::map<std::string, double> out;
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (seen_.count(it.key())) continue;
            seen_.insert(it.key());
            if (!it.value().is_number())
                fail_schema(join(path_, it.key()), "expected a number");
            out[it.key()] = it.value().get<double>();
        }
        return out;
    }

    const std::string& path() const { return path_; }
    const json& raw() const { return obj_; }

  private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail_schema(path, "expected a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail_schema(path, "expected an integer");
    return j.get<int>();
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail_schema(path, "expected a boolean");
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail_schema(path, "expected a string");
    return j.get<std::string>();
}

void read_number(Block& b, const char* key, double& out) {
    if (const json* j = b.find(key)) out = as_number(*j, join(b.path(), key));
}
void read_int(Block& b, const char* key, int& out) {
    if (const json* j = b.find(key)) out = as_int(*j, join(b.path(), key));
}
void read_bool(Block& b, const char* key, bool& out) {
    if (const json* j = b.find(key)) out = as_bool(*j, join(b.path(), key));
}
void read_string(Block& b, const char* key, std::string& out) {
    if (const json* j = b.find(key)) out = as_string(*j, join(b.path(), key));
}

void check_param_names(const std::string& path, const std::map<std::string, double>& params,
                       std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : params) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            fail_schema(join(path, key), "unknown parameter");
    }
}

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

// --- block readers ----------------------------------------------------------

void read_grid(const json& j, const std::string& path, GridConfig& g) {
    Block b(j, path);
    read_number(b, "x_min", g.x_min);
    read_number(b, "x_max", g.x_max);
    read_int(b, "n_cells", g.n_cells);
    b.done();
}

void read_time(const json& j, const std::string& path, TimeConfig& t) {
    Block b(j, path);
    read_number(b, "tau", t.tau);
    read_number(b, "horizon", t.horizon);
    b.done();
}

void read_kernel(const json& j, const std::string& path, KernelConfig& k) {
    Block b(j, path);
    read_string(b, "form", k.form);
    k.params = b.take_params();
}

void read_diffusion(const json& j, const std::string& path, DiffusionConfig& d) {
    Block b(j, path);
    read_string(b, "family", d.family);
    if (const json* terms = b.find("terms")) {
        if (!terms->is_array()) fail_schema(join(path, "terms"), "expected an array");
        int idx = 0;
        for (const json& term : *terms) {
            const std::string tpath = join(path, "terms[" + std::to_string(idx++) + "]");
            Block tb(term, tpath);
            presets::PolyTerm t{0.0, 0.0, 0.0};
            if (const json* c = tb.find("coeff")) t.coeff = as_number(*c, join(tpath, "coeff"));
            else fail_schema(tpath, "missing coeff");
            if (const json* p = tb.find("p")) t.p = as_number(*p, join(tpath, "p"));
            if (const json* q = tb.find("q")) t.q = as_number(*q, join(tpath, "q"));
            tb.done();
            d.terms.push_back(t);
        }
    }
    d.params = b.take_params();
}

void read_model(const json& j, const std::string& path, ModelConfig& m) {
    Block b(j, path);
    read_string(b, "preset", m.preset);
    const json* diffusion = b.find("diffusion");
    const json* kernels = b.find("kernels");
    m.params = b.take_params();

    if (m.preset == "custom") {
        if (diffusion) read_diffusion(*diffusion, join(path, "diffusion"), m.diffusion);
        if (kernels) {
            Block kb(*kernels, join(path, "kernels"));
            for (const char* slot : {"self1", "self2", "cross1", "cross2"}) {
                if (const json* kj = kb.find(slot)) {
                    KernelConfig kc;
                    read_kernel(*kj, join(join(path, "kernels"), slot), kc);
                    m.kernels[slot] = kc;
                }
            }
            kb.done();
        }
    } else {
        if (diffusion)
            fail_schema(join(path, "diffusion"), "only valid with preset \"custom\"");
        if (kernels) fail_schema(join(path, "kernels"), "only valid with preset \"custom\"");
    }
}

void read_initial(const json& j, const std::string& path, InitialConfig& init) {
    Block b(j, path);
    read_string(b, "shape", init.shape);
    init.params = b.take_params();
}

void read_solver(const json& j, const std::string& path, JkoConfig& s) {
    Block b(j, path);
    read_int(b, "n_q", s.n_q);
    read_number(b, "inner_tol", s.inner_tol);
    read_int(b, "max_inner_iters", s.max_inner_iters);
    read_number(b, "step_shrink", s.step_shrink);
    read_number(b, "step_grow", s.step_grow);
    read_number(b, "boundary_margin", s.boundary_margin);
    read_number(b, "boundary_tol", s.boundary_tol);
    b.done();
}

void read_diagnostics(const json& j, const std::string& path, DiagnosticsBlock& d) {
    Block b(j, path);
    read_bool(b, "enabled", d.enabled);
    read_bool(b, "calibrated", d.calibrated);
    if (const json* checks = b.find("checks")) {
        if (!checks->is_array()) fail_schema(join(path, "checks"), "expected an array");
        for (const json& c : *checks)
            d.checks.push_back(as_string(c, join(path, "checks")));
    }
    read_number(b, "s_max", d.s_max);
    read_int(b, "n_heat_steps", d.n_heat_steps);
    read_int(b, "holder_pairs", d.holder_pairs);
    read_number(b, "rel_slack", d.rel_slack);
    b.done();
}

void read_fv(const json& j, const std::string& path, FvConfig& f) {
    Block b(j, path);
    read_number(b, "dt", f.dt);
    read_bool(b, "auto_cap", f.auto_cap);
    read_number(b, "safety", f.safety);
    read_number(b, "snapshot_dt", f.snapshot_dt);
    read_bool(b, "limiter", f.limiter);
    read_number(b, "clip_tol", f.clip_tol);
    b.done();
}

void read_output(const json& j, const std::string& path, OutputConfig& o) {
    Block b(j, path);
    read_string(b, "directory", o.directory);
    if (const json* formats = b.find("formats")) {
        if (!formats->is_array()) fail_schema(join(path, "formats"), "expected an array");
        o.formats.clear();
        for (const json& f : *formats)
            o.formats.push_back(as_string(f, join(path, "formats")));
    }
    b.done();
}

// --- validation ---------------------------------------------------------------

void validate_exponent(const std::string& path, const std::map<std::string, double>& params,
                       const char* key) {
    auto it = params.find(key);
    if (it != params.end())
        require(it->second > 1.0, join(path, key), "diffusion exponent must exceed 1");
}

void validate_alpha(const std::string& path, const std::map<std::string, double>& params,
                    const char* akey, const char* mkey, double m_default) {
    const double m = param_or(params, mkey, m_default);
    auto it = params.find(akey);
    if (it == params.end()) return;
    const double alpha = it->second;
    if (!(alpha >= m && alpha < 3.0 * m)) {
        require(false, join(path, akey),
                "must lie in [" + std::to_string(m) + ", " + std::to_string(3.0 * m) +
                    "); the upper end is exclusive");
    }
}

void validate_kernel(const std::string& path, const KernelConfig& k) {
    if (k.form == "zero" || k.form == "abs") {
        check_param_names(path, k.params, {});
    } else if (k.form == "quadratic") {
        check_param_names(path, k.params, {"c"});
        require(param_or(k.params, "c", 1.0) >= 0.0, join(path, "c"),
                "confinement strength must be nonnegative");
    } else if (k.form == "gaussian" || k.form == "raw_gaussian") {
        check_param_names(path, k.params, {"amp", "sigma"});
        require(param_or(k.params, "sigma", 1.0) > 0.0, join(path, "sigma"),
                "width must be positive");
    } else {
        fail_schema(join(path, "form"), "unknown kernel form '" + k.form + "'");
    }
}

void validate_diffusion(const std::string& path, const DiffusionConfig& d) {
    if (d.family == "decoupled" || d.family == "example1") {
        check_param_names(path, d.params, {"a", "b", "m1", "m2"});
        validate_exponent(path, d.params, "m1");
        validate_exponent(path, d.params, "m2");
    } else if (d.family == "example2") {
        check_param_names(path, d.params, {"a", "b"});
    } else if (d.family == "example3") {
        check_param_names(path, d.params, {"a", "b", "m", "R"});
        validate_exponent(path, d.params, "m");
    } else if (d.family == "sum_square" || d.family == "zero") {
        check_param_names(path, d.params, {});
    } else if (d.family == "polynomial") {
        check_param_names(path, d.params,
                          {"m1", "m2", "alpha1", "alpha2", "coercivity", "lower_bound"});
        validate_exponent(path, d.params, "m1");
        validate_exponent(path, d.params, "m2");
        validate_alpha(path, d.params, "alpha1", "m1", 2.0);
        validate_alpha(path, d.params, "alpha2", "m2", 2.0);
        require(param_or(d.params, "coercivity", 0.0) >= 0.0, join(path, "coercivity"),
                "must be nonnegative");
        require(param_or(d.params, "lower_bound", 0.0) >= 0.0, join(path, "lower_bound"),
                "must be nonnegative");
    } else {
        fail_schema(join(path, "family"), "unknown diffusion family '" + d.family + "'");
    }
    if (d.family != "polynomial" && !d.terms.empty())
        fail_schema(join(path, "terms"), "only valid with family \"polynomial\"");
}

void validate_model(const std::string& path, const ModelConfig& m) {
    if (m.preset == "zero" || m.preset == "coupled_example1") {
        check_param_names(path, m.params, {});
    } else if (m.preset == "decoupled_pme") {
        check_param_names(path, m.params, {"a"});
        require(param_or(m.params, "a", 1.0) > 0.0, join(path, "a"), "must be positive");
    } else if (m.preset == "attraction") {
        check_param_names(path, m.params, {"amp1", "sigma1", "amp2", "sigma2"});
        require(param_or(m.params, "sigma1", 0.8) > 0.0, join(path, "sigma1"),
                "width must be positive");
        require(param_or(m.params, "sigma2", 0.8) > 0.0, join(path, "sigma2"),
                "width must be positive");
    } else if (m.preset == "custom") {
        check_param_names(path, m.params, {});
        validate_diffusion(join(path, "diffusion"), m.diffusion);
        for (const auto& [slot, kernel] : m.kernels)
            validate_kernel(join(join(path, "kernels"), slot), kernel);
    } else {
        fail_schema(join(path, "preset"), "unknown preset '" + m.preset + "'");
    }
}

void validate_initial(const std::string& path, const InitialConfig& init) {
    if (init.shape == "gaussian") {
        check_param_names(path, init.params, {"center", "sigma"});
        require(param_or(init.params, "sigma", 0.3) > 0.0, join(path, "sigma"),
                "width must be positive");
    } else if (init.shape == "uniform") {
        check_param_names(path, init.params, {"a", "b"});
        require(param_or(init.params, "b", 0.5) > param_or(init.params, "a", -0.5),
                join(path, "b"), "must exceed a");
    } else if (init.shape == "triangle") {
        check_param_names(path, init.params, {"center", "halfwidth"});
        require(param_or(init.params, "halfwidth", 0.5) > 0.0, join(path, "halfwidth"),
                "must be positive");
    } else if (init.shape == "barenblatt") {
        check_param_names(path, init.params, {"t0"});
        require(param_or(init.params, "t0", 0.1) > 0.0, join(path, "t0"),
                "must be positive");
    } else {
        fail_schema(join(path, "shape"), "unknown shape '" + init.shape + "'");
    }
}

void validate(const RunConfig& cfg) {
    require(cfg.grid.x_max > cfg.grid.x_min, "grid.x_max", "must exceed x_min");
    require(cfg.grid.n_cells >= 2, "grid.n_cells", "need at least 2 cells");
    require(cfg.time.tau > 0.0, "time.tau", "must be positive");
    require(cfg.time.horizon > 0.0, "time.horizon", "must be positive");

    require(cfg.solver.n_q >= 0, "solver.n_q", "must be nonnegative");
    require(cfg.solver.inner_tol > 0.0, "solver.inner_tol", "must be positive");
    require(cfg.solver.max_inner_iters >= 1, "solver.max_inner_iters", "need at least 1");
    require(cfg.solver.step_shrink > 0.0 && cfg.solver.step_shrink < 1.0,
            "solver.step_shrink", "must lie in (0, 1)");
    require(cfg.solver.step_grow >= 1.0, "solver.step_grow", "must be at least 1");
    require(cfg.solver.boundary_margin >= 0.0, "solver.boundary_margin",
            "must be nonnegative");
    require(cfg.solver.boundary_tol >= 0.0, "solver.boundary_tol", "must be nonnegative");

    require(cfg.diagnostics.s_max > 0.0, "diagnostics.s_max", "must be positive");
    require(cfg.diagnostics.n_heat_steps >= 1, "diagnostics.n_heat_steps",
            "need at least 1");
    require(cfg.diagnostics.holder_pairs >= 4, "diagnostics.holder_pairs",
            "need at least 4");
    require(cfg.diagnostics.rel_slack > 0.0, "diagnostics.rel_slack", "must be positive");
    for (const std::string& name : cfg.diagnostics.checks) {
        const auto& known = known_check_names();
        if (std::find(known.begin(), known.end(), name) == known.end())
            fail_schema("diagnostics.checks", "unknown check '" + name + "'");
    }

    require(cfg.fv.dt > 0.0, "fv.dt", "must be positive");
    require(cfg.fv.safety > 0.0 && cfg.fv.safety <= 1.0, "fv.safety",
            "must lie in (0, 1]");
    require(cfg.fv.snapshot_dt >= 0.0, "fv.snapshot_dt", "must be nonnegative");
    require(cfg.fv.clip_tol >= 0.0, "fv.clip_tol", "must be nonnegative");

    if (cfg.output.directory.empty()) fail_schema("output.directory", "must not be empty");
    if (cfg.output.formats.empty()) fail_schema("output.formats", "must not be empty");
    std::set<std::string> seen_formats;
    for (const std::string& f : cfg.output.formats) {
        if (f != "csv" && f != "json")
            fail_schema("output.formats", "unknown format '" + f + "'");
        if (!seen_formats.insert(f).second)
            fail_schema("output.formats", "duplicate format '" + f + "'");
    }

    validate_model("model", cfg.model);
    validate_initial("initial.rho1", cfg.initial1);
    validate_initial("initial.rho2", cfg.initial2);
}

// --- serialization -------------------------------------------------------------

json params_json(const std::map<std::string, double>& params) {
    json j = json::object();
    for (const auto& [key, value] : params) j[key] = value;
    return j;
}

json kernel_json(const KernelConfig& k) {
    json j = params_json(k.params);
    j["form"] = k.form;
    return j;
}

json model_json(const ModelConfig& m) {
    json j = params_json(m.params);
    j["preset"] = m.preset;
    if (m.preset == "custom") {
        json d = params_json(m.diffusion.params);
        d["family"] = m.diffusion.family;
        if (!m.diffusion.terms.empty()) {
            json terms = json::array();
            for (const presets::PolyTerm& t : m.diffusion.terms)
                terms.push_back({{"coeff", t.coeff}, {"p", t.p}, {"q", t.q}});
            d["terms"] = terms;
        }
        j["diffusion"] = d;
        json kernels = json::object();
        for (const auto& [slot, kernel] : m.kernels) kernels[slot] = kernel_json(kernel);
        j["kernels"] = kernels;
    }
    return j;
}

json initial_json(const InitialConfig& init) {
    json j = params_json(init.params);
    j["shape"] = init.shape;
    return j;
}

} // namespace

const std::vector<std::string>& known_check_names() {
    static const std::vector<std::string> names = {
        "one_step_descent",  "strengthened_dissipation",
        "second_moment_growth", "holder_continuity",
        "growth_norm_bound", "flow_interchange",
        "entropy_bounds",    "weak_residual_rho1",
        "weak_residual_rho2"};
    return names;
}

RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        size_t line = 1, col = 1;
        const size_t stop = std::min(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw SchemaError("config: malformed JSON at line " + std::to_string(line) +
                          ", column " + std::to_string(col));
    }

    RunConfig cfg;
    Block top(root, "");
    if (const json* j = top.find("grid")) read_grid(*j, "grid", cfg.grid);
    if (const json* j = top.find("time")) read_time(*j, "time", cfg.time);
    if (const json* j = top.find("model")) read_model(*j, "model", cfg.model);
    if (const json* j = top.find("initial")) {
        Block ib(*j, "initial");
        if (const json* r1 = ib.find("rho1")) read_initial(*r1, "initial.rho1", cfg.initial1);
        if (const json* r2 = ib.find("rho2")) read_initial(*r2, "initial.rho2", cfg.initial2);
        ib.done();
    }
    if (const json* j = top.find("solver")) read_solver(*j, "solver", cfg.solver);
    if (const json* j = top.find("diagnostics"))
        read_diagnostics(*j, "diagnostics", cfg.diagnostics);
    if (const json* j = top.find("fv")) read_fv(*j, "fv", cfg.fv);
    if (const json* j = top.find("output")) read_output(*j, "output", cfg.output);
    top.done();

    validate(cfg);
    cfg.solver.tau = cfg.time.tau;

    // Resolve the model once now, so a preset whose constants cannot be
    // certified (bounded-range families, kind mismatches) fails at parse time
    // rather than halfway into a run.
    try {
        (void)build_model(cfg.model);
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw RangeError("config: model: " + std::string(e.what()));
    }
    return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
    json j;
    j["grid"] = {{"x_min", cfg.grid.x_min},
                 {"x_max", cfg.grid.x_max},
                 {"n_cells", cfg.grid.n_cells}};
    j["time"] = {{"tau", cfg.time.tau}, {"horizon", cfg.time.horizon}};
    j["model"] = model_json(cfg.model);
    j["initial"] = {{"rho1", initial_json(cfg.initial1)},
                    {"rho2", initial_json(cfg.initial2)}};
    j["solver"] = {{"n_q", cfg.solver.n_q},
                   {"inner_tol", cfg.solver.inner_tol},
                   {"max_inner_iters", cfg.solver.max_inner_iters},
                   {"step_shrink", cfg.solver.step_shrink},
                   {"step_grow", cfg.solver.step_grow},
                   {"boundary_margin", cfg.solver.boundary_margin},
                   {"boundary_tol", cfg.solver.boundary_tol}};
    json diag = {{"enabled", cfg.diagnostics.enabled},
                 {"calibrated", cfg.diagnostics.calibrated},
                 {"s_max", cfg.diagnostics.s_max},
                 {"n_heat_steps", cfg.diagnostics.n_heat_steps},
                 {"holder_pairs", cfg.diagnostics.holder_pairs},
                 {"rel_slack", cfg.diagnostics.rel_slack}};
    if (!cfg.diagnostics.checks.empty()) diag["checks"] = cfg.diagnostics.checks;
    j["diagnostics"] = diag;
    j["fv"] = {{"dt", cfg.fv.dt},
               {"auto_cap", cfg.fv.auto_cap},
               {"safety", cfg.fv.safety},
               {"snapshot_dt", cfg.fv.snapshot_dt},
               {"limiter", cfg.fv.limiter},
               {"clip_tol", cfg.fv.clip_tol}};
    j["output"] = {{"directory", cfg.output.directory},
                   {"formats", cfg.output.formats}};
    return j.dump(2) + "\n";
}

Grid1D build_grid(const GridConfig& g) { return Grid1D(g.x_min, g.x_max, g.n_cells); }

ModelSpec build_model(const ModelConfig& m) {
    using namespace presets;
    const auto p = [&](const char* key, double fallback) {
        return param_or(m.params, key, fallback);
    };

    if (m.preset == "zero") return zero_model();
    if (m.preset == "decoupled_pme") return pme(p("a", 1.0));
    if (m.preset == "coupled_example1") return coupled_example1();
    if (m.preset == "attraction")
        return attraction(p("amp1", 0.5), p("sigma1", 0.8), p("amp2", 0.5), p("sigma2", 0.8));
    if (m.preset != "custom")
        fail_schema("model.preset", "unknown preset '" + m.preset + "'");

    ModelSpec spec;
    spec.name = "custom";

    const DiffusionConfig& d = m.diffusion;
    const auto dp = [&](const char* key, double fallback) {
        return param_or(d.params, key, fallback);
    };
    if (d.family == "decoupled")
        spec.diffusion = decoupled(dp("a", 1.0), dp("b", 1.0), dp("m1", 2.0), dp("m2", 2.0));
    else if (d.family == "example1")
        spec.diffusion = example1(dp("a", 0.5), dp("b", 0.25), dp("m1", 2.0), dp("m2", 2.0));
    else if (d.family == "example2")
        spec.diffusion = example2(dp("a", 1.0), dp("b", 1.0));
    else if (d.family == "example3")
        spec.diffusion = example3(dp("a", 1.0), dp("b", 0.1), dp("m", 1.5), dp("R", 4.0));
    else if (d.family == "sum_square")
        spec.diffusion = sum_square();
    else if (d.family == "zero")
        spec.diffusion = zero_diffusion();
    else if (d.family == "polynomial")
        spec.diffusion = polynomial_b("polynomial", d.terms, dp("m1", 2.0), dp("m2", 2.0),
                                      dp("alpha1", dp("m1", 2.0)), dp("alpha2", dp("m2", 2.0)),
                                      dp("coercivity", 0.0), dp("lower_bound", 0.0));
    else
        fail_schema("model.diffusion.family", "unknown diffusion family '" + d.family + "'");

    const auto kernel_for = [&](const char* slot, KernelKind kind) {
        auto it = m.kernels.find(slot);
        if (it == m.kernels.end()) return zero_kernel(kind);
        const KernelConfig& k = it->second;
        const auto kp = [&](const char* key, double fallback) {
            return param_or(k.params, key, fallback);
        };
        if (k.form == "zero") return zero_kernel(kind);
        if (k.form == "quadratic") return quadratic_self(kind, kp("c", 1.0));
        if (k.form == "gaussian") return gaussian(kind, kp("amp", 0.5), kp("sigma", 0.8));
        if (k.form == "raw_gaussian")
            return raw_gaussian(kind, kp("amp", 0.5), kp("sigma", 0.8));
        if (k.form == "abs") return abs_self(kind);
        fail_schema(join(join("model.kernels", slot), "form"),
                    "unknown kernel form '" + k.form + "'");
    };
    spec.H1 = kernel_for("self1", KernelKind::self1);
    spec.H2 = kernel_for("self2", KernelKind::self2);
    spec.K1 = kernel_for("cross1", KernelKind::cross1);
    spec.K2 = kernel_for("cross2", KernelKind::cross2);
    return spec;
}

Density build_density(const InitialConfig& init, const Grid1D& grid) {
    using namespace presets;
    const auto p = [&](const char* key, double fallback) {
        return param_or(init.params, key, fallback);
    };
    if (init.shape == "gaussian")
        return gaussian_density(grid, p("center", 0.0), p("sigma", 0.3));
    if (init.shape == "uniform") return uniform_density(grid, p("a", -0.5), p("b", 0.5));
    if (init.shape == "triangle")
        return triangle_density(grid, p("center", 0.0), p("halfwidth", 0.5));
    if (init.shape == "barenblatt") return barenblatt(grid, p("t0", 0.1));
    fail_schema("initial.shape", "unknown shape '" + init.shape + "'");
}

JkoConfig jko_config(const RunConfig& cfg) {
    JkoConfig j = cfg.solver;
    j.tau = cfg.time.tau;
    return j;
}

DiagnosticsConfig diagnostics_config(const RunConfig& cfg) {
    DiagnosticsConfig d;
    d.inner_tol = cfg.solver.inner_tol;
    d.s_max = cfg.diagnostics.s_max;
    d.n_heat_steps = cfg.diagnostics.n_heat_steps;
    d.holder_pairs = cfg.diagnostics.holder_pairs;
    d.rel_slack = cfg.diagnostics.rel_slack;
    return d;
}

} // namespace crossdiff

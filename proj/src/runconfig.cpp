#include "floq/runconfig.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace floq {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kModes = {
    "static-spectrum", "pole-trace", "critical-point", "scatter",
    "scatter-grid",    "emission",   "verify",         "ep-scan"};

Range parse_range(const std::string& key, const json& v) {
    if (!v.is_array() || v.size() != 3)
        throw config_error(key + ": expected [start, stop, count]");
    Range r;
    r.start = v[0].get<double>();
    r.stop = v[1].get<double>();
    r.count = v[2].get<int>();
    if (r.count < 0) throw config_error(key + ": negative count");
    return r;
}

void set_key(RunConfig& cfg, const std::string& key, const json& v) {
    try {
        if (key == "mode")
            cfg.mode = v.get<std::string>();
        else if (key == "V0")
            cfg.V0 = v.get<double>();
        else if (key == "d")
            cfg.d = v.get<double>();
        else if (key == "A_over_pi")
            cfg.A_over_pi = v.get<double>();
        else if (key == "variant")
            cfg.variant = v.get<int>();
        else if (key == "m")
            cfg.m = v.get<int>();
        else if (key == "F2")
            cfg.F2 = v.get<double>();
        else if (key == "omega")
            cfg.omega = v.get<double>();
        else if (key == "F2_range")
            cfg.F2_range = parse_range(key, v);
        else if (key == "omega_range")
            cfg.omega_range = parse_range(key, v);
        else if (key == "V0_range")
            cfg.V0_range = parse_range(key, v);
        else if (key == "J_neg")
            cfg.J_neg = v.get<int>();
        else if (key == "J_pos")
            cfg.J_pos = v.get<int>();
        else if (key == "L_max")
            cfg.L_max = v.get<int>();
        else if (key == "N_t")
            cfg.N_t = v.get<int>();
        else if (key == "parity")
            cfg.parity = v.get<int>();
        else if (key == "tol_sv")
            cfg.tol_sv = v.get<double>();
        else if (key == "max_iter")
            cfg.max_iter = v.get<int>();
        else if (key == "step_init")
            cfg.step_init = v.get<double>();
        else if (key == "step_min")
            cfg.step_min = v.get<double>();
        else if (key == "step_max")
            cfg.step_max = v.get<double>();
        else if (key == "jump_factor")
            cfg.jump_factor = v.get<double>();
        else if (key == "branch")
            cfg.branch = v.get<std::string>();
        else if (key == "level_l")
            cfg.level_l = v.get<int>();
        else if (key == "level_index")
            cfg.level_index = v.get<int>();
        else if (key == "j_in")
            cfg.j_in = v.get<int>();
        else if (key == "l1_in")
            cfg.l1_in = v.get<int>();
        else if (key == "n_theta")
            cfg.n_theta = v.get<int>();
        else if (key == "n_points")
            cfg.n_points = v.get<int>();
        else if (key == "residual_tol")
            cfg.residual_tol = v.get<double>();
        else if (key == "seed")
            cfg.seed = v.get<unsigned>();
        else if (key == "solution")
            cfg.solution = v.get<std::string>();
        else if (key == "out")
            cfg.out = v.get<std::string>();
        else if (key == "workers")
            cfg.workers = v.get<int>();
        else if (key == "derived")
            ; // echoed well parameters, informational only
        else
            throw config_error("unknown config key: " + key);
    } catch (const json::exception& e) {
        throw config_error(key + ": " + e.what());
    }
}

} // namespace

void validate_config(const RunConfig& cfg) {
    bool known = false;
    for (const auto& mname : kModes) known = known || (cfg.mode == mname);
    if (!known) {
        std::string msg = cfg.mode.empty() ? "missing mode; valid modes:"
                                           : "unknown mode '" + cfg.mode + "'; valid modes:";
        for (const auto& mname : kModes) msg += " " + mname;
        throw config_error(msg);
    }
    if (cfg.d.has_value() == cfg.A_over_pi.has_value())
        throw config_error("well specification: exactly one of {d, A_over_pi} required");
    if (cfg.V0 <= 0.0) throw config_error("V0: must be positive");
    if (cfg.d && *cfg.d <= 0.0) throw config_error("d: must be positive");
    if (cfg.A_over_pi && *cfg.A_over_pi >= 0.0) throw config_error("A_over_pi: must be negative");
    if (cfg.variant < 1 || cfg.variant > 4) throw config_error("variant: must be 1..4");
    if (cfg.tol_sv <= 0.0) throw config_error("tol_sv: must be positive");
    if (cfg.residual_tol <= 0.0) throw config_error("residual_tol: must be positive");
    if (cfg.step_init <= 0.0 || cfg.step_min <= 0.0 || cfg.step_max <= 0.0)
        throw config_error("step sizes: must be positive");
    if (cfg.parity != 1 && cfg.parity != -1) throw config_error("parity: must be +1 or -1");
    if (cfg.branch != "emission" && cfg.branch != "capture")
        throw config_error("branch: must be 'emission' or 'capture'");
    if (cfg.workers < 1) throw config_error("workers: must be >= 1");
    if (cfg.J_neg < 0 || cfg.J_pos < 0 || cfg.L_max < 0 || cfg.N_t < 4)
        throw config_error("truncation: J_neg, J_pos, L_max >= 0 and N_t >= 4 required");
}

WellModel RunConfig::well() const {
    WellModel w = d ? WellModel::from_d(V0, *d, variant)
                    : WellModel::from_A(*A_over_pi, V0, variant);
    w.m = m;
    return w;
}

SolveContext RunConfig::context() const {
    SolveContext ctx;
    ctx.well = well();
    ctx.F2 = F2;
    ctx.trunc.J_neg = J_neg;
    ctx.trunc.J_pos = J_pos;
    ctx.trunc.L_max = L_max;
    ctx.trunc.N_t = N_t;
    ctx.trunc.parity = parity;
    ctx.tables = CouplingTables::build(L_max, m);
    ctx.tol_sv = tol_sv;
    ctx.max_iter = max_iter;
    return ctx;
}

BoundaryKind RunConfig::open_kind() const {
    return branch == "capture" ? BoundaryKind::capture_open : BoundaryKind::emission_open;
}

StepControl RunConfig::steps() const {
    StepControl sc;
    sc.init = step_init;
    sc.min = step_min;
    sc.max = step_max;
    sc.jump_factor = jump_factor;
    return sc;
}

RunConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config parse: ") + e.what());
    }
    if (!doc.is_object()) throw config_error("config parse: top-level object expected");
    RunConfig cfg;
    for (const auto& [key, v] : doc.items()) set_key(cfg, key, v);
    validate_config(cfg);
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config file not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw config_error("override: expected key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string val = assignment.substr(eq + 1);
    json v = json::parse(val, nullptr, false);
    if (v.is_discarded()) v = val; // bare strings
    set_key(cfg, key, v);
}

std::string config_snapshot(const RunConfig& cfg) {
    const WellModel w = cfg.well();
    nlohmann::ordered_json j;
    j["mode"] = cfg.mode;
    j["V0"] = cfg.V0;
    if (cfg.d) j["d"] = *cfg.d;
    if (cfg.A_over_pi) j["A_over_pi"] = *cfg.A_over_pi;
    j["derived"] = {{"d", w.d}, {"A_over_pi", w.A / M_PI}, {"A", w.A}};
    j["variant"] = cfg.variant;
    j["m"] = cfg.m;
    j["F2"] = cfg.F2;
    j["omega"] = cfg.omega;
    const auto put_range = [&](const char* key, const std::optional<Range>& r) {
        if (r) j[key] = {r->start, r->stop, r->count};
    };
    put_range("F2_range", cfg.F2_range);
    put_range("omega_range", cfg.omega_range);
    put_range("V0_range", cfg.V0_range);
    j["J_neg"] = cfg.J_neg;
    j["J_pos"] = cfg.J_pos;
    j["L_max"] = cfg.L_max;
    j["N_t"] = cfg.N_t;
    j["parity"] = cfg.parity;
    j["tol_sv"] = cfg.tol_sv;
    j["max_iter"] = cfg.max_iter;
    j["step_init"] = cfg.step_init;
    j["step_min"] = cfg.step_min;
    j["step_max"] = cfg.step_max;
    j["jump_factor"] = cfg.jump_factor;
    j["branch"] = cfg.branch;
    j["level_l"] = cfg.level_l;
    j["level_index"] = cfg.level_index;
    j["j_in"] = cfg.j_in;
    j["l1_in"] = cfg.l1_in;
    j["n_theta"] = cfg.n_theta;
    j["n_points"] = cfg.n_points;
    j["residual_tol"] = cfg.residual_tol;
    j["seed"] = cfg.seed;
    j["solution"] = cfg.solution;
    j["out"] = cfg.out;
    j["workers"] = cfg.workers;
    return j.dump(2);
}

} // namespace floq

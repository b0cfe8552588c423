#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <random>
#include <thread>

#include "floq/observables.hpp"
#include "floq/runconfig.hpp"

namespace floq {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json cpx(cplx z) { return json::array({z.real(), z.imag()}); }
cplx as_cplx(const json& v) { return {v[0].get<double>(), v[1].get<double>()}; }

/// One delimited table plus its full-precision sidecar, written atomically
/// at the end of a run.
struct ModeOutput {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    json sidecar;

    void write(const RunConfig& cfg) const {
        fs::create_directories(cfg.out);
        std::string stem = cfg.mode;
        for (auto& c : stem)
            if (c == '-') c = '_';
        std::ofstream tsv(fs::path(cfg.out) / (stem + ".tsv"));
        for (std::size_t i = 0; i < header.size(); ++i)
            tsv << (i ? "\t" : "") << header[i];
        tsv << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                tsv << (i ? "\t" : "") << fmt17(row[i]);
            tsv << "\n";
        }
        if (!tsv) throw std::runtime_error("unwritable output path: " + cfg.out);
        std::ofstream js(fs::path(cfg.out) / (stem + ".json"));
        js << sidecar.dump(1) << "\n";
    }
};

json base_sidecar(const RunConfig& cfg) {
    json j;
    j["config"] = json::parse(config_snapshot(cfg));
    j["partial"] = false;
    j["rows"] = json::array();
    return j;
}

std::vector<std::string> trajectory_header(const RunConfig& cfg) {
    std::vector<std::string> h = {"F2", "Re_omega", "Im_omega"};
    for (int j = -cfg.J_neg; j <= cfg.J_pos; ++j) {
        h.push_back("Re_k_" + std::to_string(j));
        h.push_back("Im_k_" + std::to_string(j));
    }
    h.push_back("sigma_min");
    h.push_back("iterations");
    return h;
}

std::vector<double> trajectory_row(const RunConfig& cfg, const TracePoint& tp) {
    std::vector<double> row = {tp.sol.F2, tp.sol.omega.real(), tp.sol.omega.imag()};
    for (int j = -cfg.J_neg; j <= cfg.J_pos; ++j) {
        row.push_back(tp.ks.at(j).real());
        row.push_back(tp.ks.at(j).imag());
    }
    row.push_back(tp.sol.sigma_min);
    row.push_back(static_cast<double>(tp.sol.iterations));
    return row;
}

json trajectory_record(const RunConfig& cfg, const TracePoint& tp) {
    json r;
    r["F2"] = tp.sol.F2;
    r["omega"] = cpx(tp.sol.omega);
    r["sigma_min"] = tp.sol.sigma_min;
    r["iterations"] = tp.sol.iterations;
    r["n_t_used"] = tp.sol.n_t_used;
    json ks = json::array();
    for (int j = -cfg.J_neg; j <= cfg.J_pos; ++j) ks.push_back(cpx(tp.ks.at(j)));
    r["k"] = std::move(ks);
    json a = json::array(), b = json::array();
    for (int i = 0; i < tp.sol.a.size(); ++i) a.push_back(cpx(tp.sol.a[i]));
    for (int i = 0; i < tp.sol.b.size(); ++i) b.push_back(cpx(tp.sol.b[i]));
    r["a"] = std::move(a);
    r["b"] = std::move(b);
    return r;
}

/// Minimal trace point (omega, F2, momenta) from a persisted record; enough
/// to restart a continuation.
TracePoint trace_point_from_record(const RunConfig& cfg, const json& r) {
    TracePoint tp;
    tp.sol.omega = as_cplx(r["omega"]);
    tp.sol.F2 = r["F2"].get<double>();
    tp.sol.sigma_min = r["sigma_min"].get<double>();
    tp.sol.iterations = r["iterations"].get<int>();
    tp.ks.j_min = -cfg.J_neg;
    for (const auto& kj : r["k"]) tp.ks.k.push_back(as_cplx(kj));
    return tp;
}

/// Full solution rebuild (channels, coefficients) for verification runs.
FloquetSolution solution_from_record(const RunConfig& cfg, const SolveContext& ctx,
                                     const json& r) {
    FloquetSolution sol;
    sol.omega = as_cplx(r["omega"]);
    sol.F2 = r["F2"].get<double>();
    sol.sigma_min = r["sigma_min"].get<double>();
    sol.lattice = ctx.lattice();
    DriveWaveform drv{sol.F2, ctx.well.include_VF()};
    std::vector<cplx> ks;
    for (const auto& kj : r["k"]) ks.push_back(as_cplx(kj));
    sol.a.resize(sol.lattice.size());
    sol.b.resize(sol.lattice.size());
    for (int i = 0; i < sol.lattice.size(); ++i) {
        const auto [f, l1] = sol.lattice.sites[i];
        Channel ext{f, l1, ks[f + cfg.J_neg], 1.0};
        ext.flux_norm = flux_normalization(ext.k, l1, cfg.m);
        sol.exterior.push_back(ext);
        const cplx kap = std::sqrt(channel_energy2(sol.omega, f, Side::interior, ctx.well, drv));
        sol.interior.push_back({f, l1, kap, 1.0});
        sol.a[i] = as_cplx(r["a"][i]);
        sol.b[i] = as_cplx(r["b"][i]);
    }
    return sol;
}

/// Static level used to seed a trace: entry `level_index` of the l ladder.
double seed_level(const SolveContext& ctx, const RunConfig& cfg) {
    const auto spec = static_spectrum(ctx.well, std::max(cfg.level_l, 1));
    int seen = 0;
    for (const auto& b : spec)
        if (b.l == cfg.level_l && seen++ == cfg.level_index) return b.omega;
    throw std::runtime_error("no static level with l=" + std::to_string(cfg.level_l) +
                             " index=" + std::to_string(cfg.level_index));
}

/// Bounded worker pool with deterministic slot order.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, n); ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

int run_static_spectrum(const RunConfig& cfg, ModeOutput& out) {
    const auto spec = static_spectrum(cfg.well(), cfg.L_max);
    out.header = {"l", "omega"};
    for (const auto& b : spec) {
        out.rows.push_back({static_cast<double>(b.l), b.omega});
        json r;
        r["l"] = b.l;
        r["omega"] = b.omega;
        out.sidecar["rows"].push_back(std::move(r));
    }
    return 0;
}

int run_pole_trace(const RunConfig& cfg, ModeOutput& out) {
    SolveContext ctx = cfg.context();
    out.header = trajectory_header(cfg);

    TracePoint start;
    bool resumed = false;
    const fs::path side = fs::path(cfg.out) / "pole_trace.json";
    if (fs::exists(side)) {
        std::ifstream in(side);
        json prior = json::parse(in, nullptr, false);
        if (prior.is_object() && prior.contains("rows") && !prior["rows"].empty()) {
            for (const auto& r : prior["rows"]) {
                out.rows.push_back(trajectory_row(cfg, trace_point_from_record(cfg, r)));
                out.sidecar["rows"].push_back(r);
            }
            start = trace_point_from_record(cfg, prior["rows"].back());
            resumed = true;
        }
    }
    if (!resumed) {
        start = seed_static(ctx, cplx{seed_level(ctx, cfg), 0.0}, cfg.open_kind());
        out.rows.push_back(trajectory_row(cfg, start));
        out.sidecar["rows"].push_back(trajectory_record(cfg, start));
    }
    out.sidecar["resumed"] = resumed;

    int status = 0;
    if (start.sol.F2 < cfg.F2) {
        try {
            const auto trace = continue_in_F2(ctx, start, cfg.F2, cfg.steps());
            for (const auto& tp : trace) {
                out.rows.push_back(trajectory_row(cfg, tp));
                out.sidecar["rows"].push_back(trajectory_record(cfg, tp));
            }
        } catch (const continuation_error& e) {
            out.sidecar["partial"] = true;
            out.sidecar["error"] = e.what();
            status = 1;
        }
    }
    return status;
}

int run_critical_point(const RunConfig& cfg, ModeOutput& out) {
    SolveContext ctx = cfg.context();
    out.header = {"F2c", "Re_omega_c", "Im_omega_c"};

    const TracePoint seed = seed_static(ctx, cplx{seed_level(ctx, cfg), 0.0}, cfg.open_kind());
    std::vector<TracePoint> trace;
    try {
        trace = continue_in_F2(ctx, seed, cfg.F2, cfg.steps());
    } catch (const continuation_error& e) {
        out.sidecar["partial"] = true;
        out.sidecar["error"] = e.what();
        return 1;
    }
    json jtrace = json::array();
    for (const auto& tp : trace) jtrace.push_back(trajectory_record(cfg, tp));
    out.sidecar["trace"] = std::move(jtrace);

    const TracePoint* below = nullptr;
    const TracePoint* above = nullptr;
    for (const auto& tp : trace) {
        if (tp.sol.omega.imag() < 0.0) below = &tp;
        if (tp.sol.omega.imag() > 0.0 && !above) above = &tp;
    }
    if (!below || !above) {
        out.sidecar["partial"] = true;
        out.sidecar["error"] = "no real-axis crossing up to F2 = " + fmt17(cfg.F2);
        return 1;
    }
    const CriticalPoint cp = critical_point(ctx, *below, *above);
    out.rows.push_back({cp.F2c, cp.omega_c.real(), cp.omega_c.imag()});
    json r;
    r["F2c"] = cp.F2c;
    r["omega_c"] = cpx(cp.omega_c);
    r["at"] = trajectory_record(cfg, cp.at);
    out.sidecar["rows"].push_back(std::move(r));
    return 0;
}

std::vector<double> scatter_row(const ScatteringRecord& rec) {
    const cplx S00 = rec.S_at(0, 0);
    const cplx S21 = rec.S_at(1, 1);
    return {rec.F2,          rec.omega,          S00.real(),    S00.imag(),
            std::norm(S00),  std::arg(S00),      std::norm(S21), rec.sigma_e0,
            rec.sigma_r0,    rec.sigma_t0};
}

json scatter_record(const ScatteringRecord& rec) {
    json r;
    r["F2"] = rec.F2;
    r["omega"] = rec.omega;
    r["S00"] = cpx(rec.S_at(0, 0));
    r["S21"] = cpx(rec.S_at(1, 1));
    r["sigma_e0"] = rec.sigma_e0;
    r["sigma_r0"] = rec.sigma_r0;
    r["sigma_t0"] = rec.sigma_t0;
    r["unitarity"] = rec.unitarity;
    r["residual"] = rec.residual;
    return r;
}

const std::vector<std::string> kGridHeader = {
    "F2",        "omega",    "Re_S00",    "Im_S00",    "abs_S00_sq",
    "arg_S00",   "abs_S21_sq", "sigma_e0", "sigma_r0", "sigma_t0"};

int run_scatter(const RunConfig& cfg, ModeOutput& out) {
    SolveContext ctx = cfg.context();
    out.header = kGridHeader;
    const auto rec = scattering_solve(ctx, cfg.omega, cfg.j_in, cfg.l1_in);
    out.rows.push_back(scatter_row(rec));
    out.sidecar["rows"].push_back(scatter_record(rec));
    return 0;
}

int run_scatter_grid(const RunConfig& cfg, ModeOutput& out) {
    if (!cfg.F2_range || !cfg.omega_range)
        throw config_error("scatter-grid: F2_range and omega_range required");
    const Range fr = *cfg.F2_range;
    const Range wr = *cfg.omega_range;
    const int n = fr.count * wr.count;
    out.header = kGridHeader;

    const SolveContext base = cfg.context();
    std::vector<ScatteringRecord> recs(n);
    std::vector<std::string> errors(n);
    parallel_for(n, cfg.workers, [&](int i) {
        SolveContext ctx = base;
        ctx.F2 = fr.at(i / wr.count);
        try {
            recs[i] = scattering_solve(ctx, wr.at(i % wr.count), cfg.j_in, cfg.l1_in);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    int status = 0;
    for (int i = 0; i < n; ++i) {
        if (!errors[i].empty()) {
            out.sidecar["partial"] = true;
            json r;
            r["F2"] = fr.at(i / wr.count);
            r["omega"] = wr.at(i % wr.count);
            r["error"] = errors[i];
            out.sidecar["rows"].push_back(std::move(r));
            status = 1;
            continue;
        }
        out.rows.push_back(scatter_row(recs[i]));
        out.sidecar["rows"].push_back(scatter_record(recs[i]));
    }
    return status;
}

int run_emission(const RunConfig& cfg, ModeOutput& out) {
    SolveContext ctx = cfg.context();
    out.header = {"j", "Re_k"};
    for (int l1 = 0; l1 <= cfg.L_max; ++l1)
        out.header.push_back("weight_l1_" + std::to_string(l1));
    for (int i = 0; i < cfg.n_theta; ++i) out.header.push_back("f_theta_" + std::to_string(i));

    const TracePoint seed = seed_static(ctx, cplx{seed_level(ctx, cfg), 0.0}, cfg.open_kind());
    TracePoint end = seed;
    if (cfg.F2 > 0.0) {
        try {
            auto trace = continue_in_F2(ctx, seed, cfg.F2, cfg.steps());
            end = trace.back();
        } catch (const continuation_error& e) {
            out.sidecar["partial"] = true;
            out.sidecar["error"] = e.what();
            return 1;
        }
    }
    const EmissionDensity ed = emission_density(end.sol);
    out.sidecar["omega"] = cpx(end.sol.omega);
    out.sidecar["norm"] = ed.norm;
    out.sidecar["im_omega"] = ed.im_omega;
    out.sidecar["dominant_channel"] = ed.dominant_channel();
    json thetas = json::array();
    for (int i = 0; i < cfg.n_theta; ++i) thetas.push_back((i + 0.5) * M_PI / cfg.n_theta);
    out.sidecar["theta"] = thetas;

    for (const auto& s : ed.shells) {
        std::vector<double> row = {static_cast<double>(s.j), s.k_re};
        std::vector<double> wl(cfg.L_max + 1, 0.0);
        for (const auto& [l1, b] : s.b_l1)
            if (l1 <= cfg.L_max) wl[l1] = std::norm(b) / ed.norm;
        row.insert(row.end(), wl.begin(), wl.end());
        for (int i = 0; i < cfg.n_theta; ++i)
            row.push_back(ed.f_theta(s, (i + 0.5) * M_PI / cfg.n_theta));
        out.rows.push_back(std::move(row));

        json r;
        r["j"] = s.j;
        r["Re_k"] = s.k_re;
        r["weight"] = s.weight;
        json bl = json::array();
        for (const auto& [l1, b] : s.b_l1) bl.push_back(json::array({l1, cpx(b)}));
        r["b_l1"] = std::move(bl);
        out.sidecar["rows"].push_back(std::move(r));
    }
    return 0;
}

int run_verify(const RunConfig& cfg, ModeOutput& out) {
    std::string path = cfg.solution;
    if (path.empty()) path = (fs::path(cfg.out) / "pole_trace.json").string();
    std::ifstream in(path);
    if (!in) throw config_error("verify: solution file not found: " + path);
    json doc = json::parse(in, nullptr, false);
    if (!doc.is_object() || !doc.contains("rows") || !doc.contains("config"))
        throw config_error("verify: not a trajectory sidecar: " + path);
    // rebuild under the producing run's configuration, not the current one
    RunConfig src = parse_config(doc["config"].dump());

    out.header = {"row", "F2", "Re_omega", "Im_omega", "residual"};
    double worst = 0.0;
    int idx = 0;
    for (const auto& r : doc["rows"]) {
        SolveContext ctx = src.context();
        ctx.F2 = r["F2"].get<double>();
        const FloquetSolution sol = solution_from_record(src, ctx, r);

        std::mt19937 rng(cfg.seed);
        std::uniform_real_distribution<double> ur(0.15 * ctx.well.d, 3.0 * ctx.well.d);
        std::uniform_real_distribution<double> uth(0.05, M_PI - 0.05);
        std::uniform_real_distribution<double> ut(0.0, M_PI);
        std::vector<std::array<double, 3>> pts;
        while (static_cast<int>(pts.size()) < cfg.n_points) {
            const double rr = ur(rng);
            if (std::abs(rr - ctx.well.d) < 0.05 * ctx.well.d) continue;
            pts.push_back({rr, uth(rng), ut(rng)});
        }
        const double res = residual_verify(ctx, sol, pts);
        worst = std::max(worst, res);
        out.rows.push_back({static_cast<double>(idx), sol.F2, sol.omega.real(),
                            sol.omega.imag(), res});
        json jr;
        jr["row"] = idx;
        jr["F2"] = sol.F2;
        jr["omega"] = cpx(sol.omega);
        jr["residual"] = res;
        out.sidecar["rows"].push_back(std::move(jr));
        ++idx;
    }
    out.sidecar["max_residual"] = worst;
    out.sidecar["pass"] = worst <= cfg.residual_tol;
    return worst <= cfg.residual_tol ? 0 : 1;
}

int run_ep_scan(const RunConfig& cfg, ModeOutput& out) {
    if (!cfg.V0_range) throw config_error("ep-scan: V0_range required");
    out.header = {"V0", "d", "omega_s", "omega_p", "gap_mod2"};
    const auto wrap2 = [](double x) { return x - 2.0 * std::round(x / 2.0); };
    for (int i = 0; i < cfg.V0_range->count; ++i) {
        const double V0 = cfg.V0_range->at(i);
        WellModel w = cfg.d ? WellModel::from_d(V0, *cfg.d, cfg.variant)
                            : WellModel::from_A(*cfg.A_over_pi, V0, cfg.variant);
        const auto spec = static_spectrum(w, 1);
        double best = 2.0, ws = 0.0, wp = 0.0;
        for (const auto& a : spec)
            for (const auto& b : spec) {
                if (a.l != 0 || b.l != 1) continue;
                const double gap = std::abs(wrap2(a.omega - b.omega));
                if (gap < best) {
                    best = gap;
                    ws = a.omega;
                    wp = b.omega;
                }
            }
        out.rows.push_back({V0, w.d, ws, wp, best});
        json r;
        r["V0"] = V0;
        r["d"] = w.d;
        r["omega_s"] = ws;
        r["omega_p"] = wp;
        r["gap_mod2"] = best;
        json full = json::array();
        for (const auto& b : spec) full.push_back(json::array({b.l, b.omega}));
        r["spectrum"] = std::move(full);
        out.sidecar["rows"].push_back(std::move(r));
    }
    return 0;
}

} // namespace

int run(const RunConfig& cfg) {
    ModeOutput out;
    out.sidecar = base_sidecar(cfg);
    int status = 0;
    try {
        if (cfg.mode == "static-spectrum")
            status = run_static_spectrum(cfg, out);
        else if (cfg.mode == "pole-trace")
            status = run_pole_trace(cfg, out);
        else if (cfg.mode == "critical-point")
            status = run_critical_point(cfg, out);
        else if (cfg.mode == "scatter")
            status = run_scatter(cfg, out);
        else if (cfg.mode == "scatter-grid")
            status = run_scatter_grid(cfg, out);
        else if (cfg.mode == "emission")
            status = run_emission(cfg, out);
        else if (cfg.mode == "verify")
            status = run_verify(cfg, out);
        else if (cfg.mode == "ep-scan")
            status = run_ep_scan(cfg, out);
    } catch (const config_error&) {
        throw;
    } catch (const std::exception& e) {
        out.sidecar["partial"] = true;
        out.sidecar["error"] = e.what();
        status = 1;
    }
    out.write(cfg);
    return status;
}

} // namespace floq

#ifndef FLOQ_RUNCONFIG_HPP
#define FLOQ_RUNCONFIG_HPP

#include <optional>
#include <string>

#include "floq/matching.hpp"

namespace floq {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inclusive linear grid start..stop with `count` points (count=1 -> start).
struct Range {
    double start = 0.0, stop = 0.0;
    int count = 0;
    double at(int i) const {
        return (count < 2) ? start : start + (stop - start) * i / (count - 1);
    }
};

/// One fully-specified run: well + drive + truncation + mode plumbing.
/// Defaults are materialized at parse time; `well()` resolves the
/// d <-> A_over_pi redundancy (exactly one must be given).
struct RunConfig {
    std::string mode;

    double V0 = 0.0;
    std::optional<double> d, A_over_pi;
    int variant = 1;
    int m = 0;

    double F2 = 0.0;        ///< drive endpoint (pole-trace, emission) or fixed value (scatter)
    double omega = 0.0;     ///< fixed real quasi-energy (scatter)
    std::optional<Range> F2_range, omega_range, V0_range;

    int J_neg = 6, J_pos = 6, L_max = 8, N_t = 64, parity = +1;
    double tol_sv = 1e-10;
    int max_iter = 60;
    double step_init = 5e-3, step_min = 1e-7, step_max = 2e-2, jump_factor = 10.0;

    std::string branch = "emission"; ///< or "capture"
    int level_l = 0;                 ///< static level seeding a trace: angular momentum
    int level_index = 0;             ///< ...and position within that l ladder
    int j_in = 0, l1_in = 0;         ///< scattering input channel
    int n_theta = 33;                ///< emission angular sample count
    int n_points = 20;               ///< verify sample count
    double residual_tol = 1e-6;     ///< verify pass threshold
    unsigned seed = 1;               ///< verify sample-point seed
    std::string solution;            ///< verify input sidecar (default: <out>/pole_trace.json)

    std::string out = "out";
    int workers = 1;

    WellModel well() const;
    SolveContext context() const;
    BoundaryKind open_kind() const;
    StepControl steps() const;
};

/// Parse + validate a JSON config document. Unknown keys, conflicting well
/// specification and non-positive tolerances raise config_error naming the key.
RunConfig parse_config(const std::string& json_text);
RunConfig parse_config_file(const std::string& path);

/// Apply one "key=value" override on top of a parsed config (unvalidated).
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Re-check invariants after overrides; throws config_error.
void validate_config(const RunConfig& cfg);

/// Full config snapshot (JSON text) with derived well parameters echoed.
std::string config_snapshot(const RunConfig& cfg);

/// Execute the configured mode, writing <out>/<mode>.tsv and a full-precision
/// JSON sidecar. Returns a process exit status; solver failures leave a
/// partial-results marker in the sidecar.
int run(const RunConfig& cfg);

} // namespace floq

#endif

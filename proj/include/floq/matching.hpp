#ifndef FLOQ_MATCHING_HPP
#define FLOQ_MATCHING_HPP

#include <Eigen/Dense>

#include "floq/waves.hpp"

namespace floq {

using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;

/// Retained (fourier, l) sites of one checkerboard-parity sector,
/// ordered by fourier index, then by l.
struct Lattice {
    int j_min = 0, j_max = 0, l_min = 0, l_max = 0, parity = +1;
    std::vector<std::pair<int, int>> sites;

    static Lattice build(const TruncationScheme& trunc, int parity, int m = 0);
    int size() const { return static_cast<int>(sites.size()); }
    /// Position of (f, l), or -1 when outside the sector.
    int index(int f, int l) const;
};

/// Everything a solve needs besides the quasi-energy.
struct SolveContext {
    WellModel well;
    double F2 = 0.0;
    TruncationScheme trunc;
    std::shared_ptr<const CouplingTables> tables;
    double tol_sv = 1e-10;   ///< sigma_min acceptance, relative to max|M|
    int max_iter = 60;

    DriveWaveform drive() const { return {F2, well.include_VF()}; }
    Lattice lattice() const { return Lattice::build(trunc, trunc.parity, well.m); }
};

/// Sheet-tracked exterior momenta, one per fourier index.
struct KState {
    int j_min = 0;
    std::vector<cplx> k;
    cplx& at(int j) { return k[j - j_min]; }
    cplx at(int j) const { return k[j - j_min]; }
};

/// Fresh branch assignment at a continuation seed: channels with
/// Re(energy2) > 0 get `open_kind`, the rest decay.
KState kstate_init(const SolveContext& ctx, cplx omega, BoundaryKind open_kind);

/// Continue every momentum to new (omega, F2) by nearest-root selection.
void kstate_track(const SolveContext& ctx, KState& ks, cplx omega);

struct singular_interior_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct continuation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Boundary-matching blocks at fixed omega: interior C a, F a against
/// exterior D b, G b (values / radial derivatives at r = d).
struct MatchingSystem {
    Lattice lattice;
    std::vector<Channel> interior, exterior;
    MatC C, F, D1, G1, D2, G2;
    bool has_kind2 = false;
    int n_t_used = 0;

    /// G^{(a)} - F C^{-1} D^{(a)}; throws singular_interior_error when an
    /// interior basis function has a node at the boundary.
    MatC reduced(int kind = 1) const;
    /// a = C^{-1} D^{(1)} b
    VecC interior_coeffs(const VecC& b) const;
};

MatchingSystem assemble(const SolveContext& ctx, cplx omega, const KState& ks,
                        bool need_kind2 = false);

/// A located quasi-energy pole with its null vector.
struct FloquetSolution {
    cplx omega;
    double F2 = 0.0;
    Lattice lattice;
    std::vector<Channel> interior, exterior;
    VecC a, b;
    double sigma_min = 0.0, sigma_next = 0.0;
    bool degenerate = false;
    int iterations = 0;
    double kernel_residual = 0.0;
    int n_t_used = 0;
};

/// Root-find det-like smallest eigenvalue of the reduced block by Muller's
/// method, polish with an SVD, and extract the null vector (largest entry
/// gauged real positive). `ks` is advanced to the solution.
FloquetSolution pole_solve(const SolveContext& ctx, cplx omega_guess, KState& ks);

struct TracePoint {
    FloquetSolution sol;
    KState ks;
};

/// Solve at F2 = 0 from a static bound-state energy (the seed of every trace).
TracePoint seed_static(SolveContext ctx, cplx omega_static, BoundaryKind open_kind);

struct StepControl {
    double init = 5e-3;
    double min = 1e-7;
    double max = 2e-2;
    double jump_factor = 10.0; ///< reject steps moving omega > factor * predicted
};

/// March the pole from `start` to F2_target with secant prediction and
/// adaptive step halving/growth. Returns the accepted points (start excluded).
std::vector<TracePoint> continue_in_F2(SolveContext ctx, const TracePoint& start,
                                       double F2_target, const StepControl& sc = {});

struct CriticalPoint {
    double F2c = 0.0;
    cplx omega_c;
    TracePoint at;
};

/// Bisect Im(omega) = 0 between two trace points straddling the real axis.
CriticalPoint critical_point(SolveContext ctx, const TracePoint& below,
                             const TracePoint& above, double tol_F2 = 1e-10);

struct ScatteringRecord {
    double omega = 0.0;
    double F2 = 0.0;
    int j_in = 0, l1_in = 0;
    std::vector<Channel> exterior;
    VecC S;                   ///< outgoing amplitudes per lattice column
    cplx S_at(int j, int l1) const;
    Lattice lattice;
    double sigma_e0 = 0.0;    ///< elastic cross section / 2pi, s-wave entry
    double sigma_r0 = 0.0;    ///< reaction
    double sigma_t0 = 0.0;    ///< total = elastic + reaction (exact sum)
    double unitarity = 0.0;   ///< sum over open channels of |S|^2
    double residual = 0.0;
};

/// Fixed real quasi-energy scattering: unit flux in channel (j_in, l1_in),
/// kind-1 amplitudes out.
ScatteringRecord scattering_solve(const SolveContext& ctx, double omega, int j_in, int l1_in);

/// Static bound states of the undriven well (real arithmetic),
/// sorted by l then energy.
struct BoundState {
    int l = 0;
    double omega = 0.0;
};
std::vector<BoundState> static_spectrum(const WellModel& well, int l_max, int grid_n = 4000);

/// S-matrix zeros paired to a pole: reflected momenta -k_{2j,l1}.
std::vector<Channel> conjugate_zeros(const FloquetSolution& sol);

} // namespace floq

#endif

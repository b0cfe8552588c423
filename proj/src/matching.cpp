#include "floq/matching.hpp"

#include <algorithm>
#include <sstream>

namespace floq {

Lattice Lattice::build(const TruncationScheme& trunc, int parity, int m) {
    Lattice lat;
    lat.j_min = -trunc.J_neg;
    lat.j_max = trunc.J_pos;
    lat.l_min = m;
    lat.l_max = trunc.L_max;
    lat.parity = parity;
    for (int f = lat.j_min; f <= lat.j_max; ++f)
        for (int l = lat.l_min; l <= lat.l_max; ++l)
            if (((f + l) % 2 == 0 ? +1 : -1) == parity) lat.sites.emplace_back(f, l);
    return lat;
}

int Lattice::index(int f, int l) const {
    if (f < j_min || f > j_max || l < l_min || l > l_max) return -1;
    if (((f + l) % 2 == 0 ? +1 : -1) != parity) return -1;
    const auto it = std::lower_bound(sites.begin(), sites.end(), std::pair{f, l});
    if (it == sites.end() || *it != std::pair{f, l}) return -1;
    return static_cast<int>(it - sites.begin());
}

KState kstate_init(const SolveContext& ctx, cplx omega, BoundaryKind open_kind) {
    const Lattice lat = ctx.lattice();
    KState ks;
    ks.j_min = lat.j_min;
    ks.k.resize(lat.j_max - lat.j_min + 1);
    const DriveWaveform drv = ctx.drive();
    for (int j = lat.j_min; j <= lat.j_max; ++j) {
        const cplx e2 = channel_energy2(omega, j, Side::exterior, ctx.well, drv);
        const BoundaryKind kind = (e2.real() > 0.0) ? open_kind : BoundaryKind::closed;
        ks.at(j) = channel_momentum_init(e2, kind);
    }
    return ks;
}

void kstate_track(const SolveContext& ctx, KState& ks, cplx omega) {
    const DriveWaveform drv = ctx.drive();
    const int j_max = ks.j_min + static_cast<int>(ks.k.size()) - 1;
    for (int j = ks.j_min; j <= j_max; ++j)
        ks.at(j) = channel_momentum_track(ks.at(j),
                                          channel_energy2(omega, j, Side::exterior, ctx.well, drv));
}

MatC MatchingSystem::reduced(int kind) const {
    const MatC& D = (kind == 1) ? D1 : D2;
    const MatC& G = (kind == 1) ? G1 : G2;
    Eigen::PartialPivLU<MatC> lu(C);
    const auto diag = lu.matrixLU().diagonal().cwiseAbs();
    if (diag.minCoeff() < 1e-14 * diag.maxCoeff())
        throw singular_interior_error("matching: interior basis nearly singular at r = d");
    return G - F * lu.solve(D);
}

VecC MatchingSystem::interior_coeffs(const VecC& b) const {
    return C.partialPivLu().solve(D1 * b);
}

MatchingSystem assemble(const SolveContext& ctx, cplx omega, const KState& ks, bool need_kind2) {
    MatchingSystem sys;
    sys.lattice = ctx.lattice();
    const Lattice& lat = sys.lattice;
    const int n = lat.size();
    const DriveWaveform drv = ctx.drive();
    const double d = ctx.well.d;
    const int m = ctx.well.m;
    const bool phased = !ctx.well.include_VF();

    // exterior columns, flux-normalized
    std::vector<cplx> escale(n);
    for (int c = 0; c < n; ++c) {
        const auto [j, l1] = lat.sites[c];
        const cplx k = ks.at(j);
        const double fn = flux_normalization(k, l1, m);
        sys.exterior.push_back({j, l1, k, fn});
        escale[c] = fn;
    }
    const auto fill = [&](MatC& D, MatC& G, const FourierBlocks& blk) {
        D.resize(n, n);
        G.resize(n, n);
        for (int c = 0; c < n; ++c)
            for (int r = 0; r < n; ++r) {
                const int p = lat.sites[r].first - lat.sites[c].first;
                D(r, c) = blk.dcoef(c, lat.sites[r].second, p);
                G(r, c) = blk.gcoef(c, lat.sites[r].second, p);
            }
    };
    FourierBlocks b1 = driven_blocks(*ctx.tables, drv, Kernel::h1, sys.exterior, escale, d,
                                     ctx.trunc, phased);
    fill(sys.D1, sys.G1, b1);
    sys.n_t_used = b1.n_t_used;
    if (need_kind2) {
        FourierBlocks b2 = driven_blocks(*ctx.tables, drv, Kernel::h2, sys.exterior, escale, d,
                                         ctx.trunc, phased);
        fill(sys.D2, sys.G2, b2);
        sys.has_kind2 = true;
        sys.n_t_used = std::max(sys.n_t_used, b2.n_t_used);
    }

    // interior columns
    for (int c = 0; c < n; ++c) {
        const auto [fn, l1] = lat.sites[c];
        const cplx kap = std::sqrt(channel_energy2(omega, fn, Side::interior, ctx.well, drv));
        sys.interior.push_back({fn, l1, kap, 1.0});
    }
    if (ctx.well.drive_inside()) {
        std::vector<cplx> iscale(n);
        for (int c = 0; c < n; ++c)
            iscale[c] = 0.5 * ctx.tables->norm_N(lat.sites[c].second) * ipow(-lat.sites[c].second);
        FourierBlocks bi = driven_blocks(*ctx.tables, drv, Kernel::J, sys.interior, iscale, d,
                                         ctx.trunc, phased);
        fill(sys.C, sys.F, bi);
        sys.n_t_used = std::max(sys.n_t_used, bi.n_t_used);
    } else {
        sys.C = MatC::Zero(n, n);
        sys.F = MatC::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            const auto v = interior_basis(sys.interior[i].k, lat.sites[i].second, d);
            sys.C(i, i) = v.c;
            sys.F(i, i) = v.f;
        }
    }
    return sys;
}

namespace {

// Column equilibration: closed-channel hankel magnitudes span many orders
// and hide the null space from any max|M|-relative criterion. Scales come
// from the raw boundary data |D|, |G| (smooth in omega, never vanishing at
// a pole, unlike the columns of the reduced block itself), so the zero of
// det M is preserved. The null vector of the original matrix is
// col_scale * (null vector of the balanced one).
struct Balanced {
    MatC M;
    Eigen::VectorXd col_scale;
};

Balanced balance(const MatchingSystem& sys, const MatC& M) {
    const int n = static_cast<int>(M.rows());
    Balanced out;
    out.col_scale.resize(n);
    for (int c = 0; c < n; ++c) {
        const double m =
            std::max(sys.D1.col(c).cwiseAbs().maxCoeff(), sys.G1.col(c).cwiseAbs().maxCoeff());
        out.col_scale[c] = (m > 0.0) ? 1.0 / m : 1.0;
    }
    out.M = M * out.col_scale.asDiagonal();
    return out;
}

cplx min_eigenvalue(const MatC& M) {
    Eigen::ComplexEigenSolver<MatC> es(M, false);
    const auto& ev = es.eigenvalues();
    int best = 0;
    for (int i = 1; i < ev.size(); ++i)
        if (std::abs(ev[i]) < std::abs(ev[best])) best = i;
    return ev[best];
}

} // namespace

FloquetSolution pole_solve(const SolveContext& ctx, cplx omega_guess, KState& ks) {
    struct Pt {
        cplx w, f;
    };
    double scale = 1.0;
    const auto eval = [&](cplx w) -> cplx {
        KState trial = ks;
        kstate_track(ctx, trial, w);
        const MatchingSystem sys = assemble(ctx, w, trial);
        const Balanced bal = balance(sys, sys.reduced(1));
        scale = bal.M.cwiseAbs().maxCoeff();
        if (!(scale > 0.0)) throw solver_error("pole_solve: vanishing matching block");
        return min_eigenvalue(bal.M);
    };

    const double h = 1e-6 * (1.0 + std::abs(omega_guess));
    Pt p0{omega_guess + h, 0.0};
    Pt p1{omega_guess + h * cplx{0.0, 1.0}, 0.0};
    Pt p2{omega_guess, 0.0};
    p0.f = eval(p0.w);
    p1.f = eval(p1.w);
    p2.f = eval(p2.w);

    int iter = 3;
    cplx w_best = p2.w;
    double f_best = std::abs(p2.f);
    const double clip = 0.25 * (1.0 + std::abs(omega_guess));
    bool converged = std::abs(p2.f) < ctx.tol_sv * scale;
    while (!converged) {
        if (iter >= ctx.max_iter) {
            std::ostringstream os;
            os << "pole_solve: no convergence from omega = " << omega_guess << " after " << iter
               << " evaluations, best |lambda|/|M| = " << f_best / scale;
            throw solver_error(os.str());
        }
        const cplx h1 = p1.w - p0.w, h2 = p2.w - p1.w;
        const cplx d1 = (p1.f - p0.f) / h1, d2 = (p2.f - p1.f) / h2;
        const cplx aa = (d2 - d1) / (h2 + h1);
        const cplx bb = aa * h2 + d2;
        const cplx disc = std::sqrt(bb * bb - 4.0 * p2.f * aa);
        cplx den = (std::abs(bb + disc) >= std::abs(bb - disc)) ? bb + disc : bb - disc;
        cplx step;
        if (std::abs(den) == 0.0) {
            step = (std::abs(d2) > 0.0) ? -p2.f / d2 : cplx{h, 0.0};
        } else {
            step = -2.0 * p2.f / den;
        }
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag()))
            step = (p2.w - p1.w) * 0.5;
        if (std::abs(step) > clip) step *= clip / std::abs(step);
        Pt p3{p2.w + step, 0.0};
        p3.f = eval(p3.w);
        ++iter;
        if (std::abs(p3.f) < f_best) {
            f_best = std::abs(p3.f);
            w_best = p3.w;
        }
        converged = std::abs(p3.f) < ctx.tol_sv * scale ||
                    std::abs(step) < 1e-15 * (1.0 + std::abs(p3.w));
        p0 = p1;
        p1 = p2;
        p2 = p3;
        // a stagnated step is accepted here; the final sigma_min gate decides
    }

    const cplx w = p2.w;
    kstate_track(ctx, ks, w);
    MatchingSystem sys = assemble(ctx, w, ks);
    const Balanced bal = balance(sys, sys.reduced(1));
    const double mscale = bal.M.cwiseAbs().maxCoeff();
    Eigen::JacobiSVD<MatC> svd(bal.M, Eigen::ComputeThinV);
    const int nn = static_cast<int>(bal.M.rows());
    FloquetSolution sol;
    sol.omega = w;
    sol.F2 = ctx.F2;
    sol.lattice = sys.lattice;
    sol.interior = sys.interior;
    sol.exterior = sys.exterior;
    sol.sigma_min = svd.singularValues()(nn - 1);
    sol.sigma_next = (nn > 1) ? svd.singularValues()(nn - 2) : 0.0;
    if (sol.sigma_min > ctx.tol_sv * mscale) {
        std::ostringstream os;
        os << "pole_solve: sigma_min/|M| = " << sol.sigma_min / mscale << " above tolerance at "
           << w;
        throw solver_error(os.str());
    }
    sol.degenerate = sol.sigma_next < 1e-6 * mscale;
    VecC b = bal.col_scale.asDiagonal() * svd.matrixV().col(nn - 1);
    sol.kernel_residual = (bal.M * svd.matrixV().col(nn - 1)).norm();
    b /= b.norm();
    int imax = 0;
    for (int i = 1; i < nn; ++i)
        if (std::abs(b[i]) > std::abs(b[imax])) imax = i;
    b *= std::conj(b[imax]) / std::abs(b[imax]);
    sol.b = b;
    sol.a = sys.interior_coeffs(b);
    sol.iterations = iter;
    sol.n_t_used = sys.n_t_used;
    return sol;
}

TracePoint seed_static(SolveContext ctx, cplx omega_static, BoundaryKind open_kind) {
    ctx.F2 = 0.0;
    KState ks = kstate_init(ctx, omega_static, open_kind);
    FloquetSolution sol = pole_solve(ctx, omega_static, ks);
    return {std::move(sol), std::move(ks)};
}

std::vector<TracePoint> continue_in_F2(SolveContext ctx, const TracePoint& start,
                                       double F2_target, const StepControl& sc) {
    std::vector<TracePoint> trace;
    const double dir = (F2_target >= start.sol.F2) ? 1.0 : -1.0;
    double step = sc.init;
    double F2_prev2 = start.sol.F2, F2_prev = start.sol.F2;
    cplx w_prev2 = start.sol.omega, w_prev = start.sol.omega;
    const TracePoint* last = &start;
    bool have_two = false;

    while (dir * (F2_target - F2_prev) > 1e-15) {
        double F2_next = F2_prev + dir * step;
        if (dir * (F2_next - F2_target) > 0.0) F2_next = F2_target;
        cplx w_pred = w_prev;
        if (have_two && std::abs(F2_prev - F2_prev2) > 0.0)
            w_pred = w_prev + (w_prev - w_prev2) * (F2_next - F2_prev) / (F2_prev - F2_prev2);
        ctx.F2 = F2_next;
        bool ok = false;
        TracePoint next;
        try {
            next.ks = last->ks;
            FloquetSolution sol = pole_solve(ctx, w_pred, next.ks);
            const double jump = std::abs(sol.omega - w_prev);
            const double pred = std::max(std::abs(w_pred - w_prev), 1e-8);
            if (jump <= sc.jump_factor * pred) {
                next.sol = std::move(sol);
                ok = true;
            }
        } catch (const solver_error&) {
        } catch (const step_size_error&) {
        } catch (const singular_interior_error&) {
        } catch (const truncation_error&) {
        }
        if (!ok) {
            step *= 0.5;
            if (step < sc.min)
                throw continuation_error("continue_in_F2: step underflow at F2 = " +
                                         std::to_string(F2_prev));
            continue;
        }
        trace.push_back(std::move(next));
        last = &trace.back();
        F2_prev2 = F2_prev;
        w_prev2 = w_prev;
        F2_prev = last->sol.F2;
        w_prev = last->sol.omega;
        have_two = true;
        if (last->sol.iterations <= 10) step = std::min(step * 1.5, sc.max);
    }
    return trace;
}

CriticalPoint critical_point(SolveContext ctx, const TracePoint& below, const TracePoint& above,
                             double tol_F2) {
    if (below.sol.omega.imag() == 0.0 || above.sol.omega.imag() == 0.0 ||
        (below.sol.omega.imag() < 0.0) == (above.sol.omega.imag() < 0.0))
        throw std::invalid_argument("critical_point: endpoints must straddle Im omega = 0");
    TracePoint lo = below, hi = above;
    if (lo.sol.F2 > hi.sol.F2) std::swap(lo, hi);
    TracePoint mid = lo;
    while (hi.sol.F2 - lo.sol.F2 > tol_F2) {
        const double F2m = 0.5 * (lo.sol.F2 + hi.sol.F2);
        const double tfrac = (F2m - lo.sol.F2) / (hi.sol.F2 - lo.sol.F2);
        const cplx w_pred = lo.sol.omega + tfrac * (hi.sol.omega - lo.sol.omega);
        ctx.F2 = F2m;
        const TracePoint& from = (tfrac <= 0.5) ? lo : hi;
        mid.ks = from.ks;
        mid.sol = pole_solve(ctx, w_pred, mid.ks);
        if ((mid.sol.omega.imag() < 0.0) == (lo.sol.omega.imag() < 0.0))
            lo = mid;
        else
            hi = mid;
    }
    CriticalPoint cp;
    cp.F2c = 0.5 * (lo.sol.F2 + hi.sol.F2);
    cp.omega_c = 0.5 * (lo.sol.omega + hi.sol.omega);
    cp.at = mid;
    return cp;
}

cplx ScatteringRecord::S_at(int j, int l1) const {
    const int i = lattice.index(j, l1);
    return (i >= 0) ? S[i] : cplx{};
}

ScatteringRecord scattering_solve(const SolveContext& ctx, double omega, int j_in, int l1_in) {
    SolveContext c2 = ctx;
    c2.trunc.parity = ((j_in + l1_in) % 2 == 0) ? +1 : -1;
    const Lattice lat = c2.lattice();
    const DriveWaveform drv = c2.drive();

    KState ks;
    ks.j_min = lat.j_min;
    ks.k.resize(lat.j_max - lat.j_min + 1);
    for (int j = lat.j_min; j <= lat.j_max; ++j) {
        const cplx e2 = channel_energy2(cplx{omega, 0.0}, j, Side::exterior, c2.well, drv);
        const BoundaryKind kind =
            (e2.real() > 0.0) ? BoundaryKind::emission_open : BoundaryKind::closed;
        ks.at(j) = channel_momentum_init(e2, kind);
    }
    const cplx e2_in = channel_energy2(cplx{omega, 0.0}, j_in, Side::exterior, c2.well, drv);
    if (e2_in.real() <= 0.0)
        throw std::invalid_argument("scattering_solve: input channel is closed");

    MatchingSystem sys = assemble(c2, cplx{omega, 0.0}, ks, true);
    const MatC M1 = sys.reduced(1);
    const MatC M2 = sys.reduced(2);
    const int idx = lat.index(j_in, l1_in);
    if (idx < 0) throw std::invalid_argument("scattering_solve: input site outside lattice");
    const VecC rhs = -M2.col(idx);

    ScatteringRecord rec;
    rec.omega = omega;
    rec.F2 = c2.F2;
    rec.j_in = j_in;
    rec.l1_in = l1_in;
    rec.lattice = lat;
    rec.exterior = sys.exterior;
    rec.S = M1.partialPivLu().solve(rhs);
    rec.residual = (M1 * rec.S - rhs).norm() / rhs.norm();
    double uni = 0.0;
    for (int c = 0; c < lat.size(); ++c)
        if (sys.exterior[c].k.imag() == 0.0 && sys.exterior[c].k.real() > 0.0)
            uni += std::norm(rec.S[c]);
    rec.unitarity = uni;
    const cplx Sel = rec.S[idx];
    const double e_in = 0.5 * e2_in.real();
    rec.sigma_e0 = std::norm(1.0 - Sel) / (4.0 * e_in);
    rec.sigma_r0 = (1.0 - std::norm(Sel)) / (4.0 * e_in);
    rec.sigma_t0 = rec.sigma_e0 + rec.sigma_r0;
    return rec;
}

namespace {

// Modified spherical bessel of the third kind, unscaled:
// km_0 = e^{-x}/x, km_{l+1} = km_{l-1} + (2l+1)/x km_l
double km_bessel(int l, double x) {
    double k0 = std::exp(-x) / x;
    if (l == 0) return k0;
    double k1 = std::exp(-x) * (1.0 / x + 1.0 / (x * x));
    for (int i = 1; i < l; ++i) {
        const double k2 = k0 + (2.0 * i + 1.0) / x * k1;
        k0 = k1;
        k1 = k2;
    }
    return k1;
}

double km_deriv(int l, double x) { return -km_bessel(l + 1, x) + (l / x) * km_bessel(l, x); }

// Log-derivative mismatch of the static well at r = d; entire in omega,
// vanishes exactly at the bound states.
double static_mismatch(const WellModel& well, int l, double omega) {
    const double kap = std::sqrt(2.0 * (omega + well.V0));
    const double q = std::sqrt(-2.0 * omega);
    const double jd = sph_bessel_j(l, cplx{kap * well.d, 0.0}).real();
    const double jp = kap * sph_bessel_j_deriv(l, cplx{kap * well.d, 0.0}).real();
    return jp * km_bessel(l, q * well.d) - jd * q * km_deriv(l, q * well.d);
}

} // namespace

std::vector<BoundState> static_spectrum(const WellModel& well, int l_max, int grid_n) {
    std::vector<BoundState> out;
    const double eps = 1e-9 * well.V0;
    for (int l = 0; l <= l_max; ++l) {
        double w0 = -well.V0 + eps;
        double f0 = static_mismatch(well, l, w0);
        for (int i = 1; i <= grid_n; ++i) {
            const double w1 = -well.V0 + eps + (well.V0 - 2.0 * eps) * i / grid_n;
            const double f1 = static_mismatch(well, l, w1);
            if (f0 == 0.0) out.push_back({l, w0});
            if (f0 * f1 < 0.0) {
                double a = w0, b = w1, fa = f0;
                for (int it = 0; it < 200 && b - a > 1e-14 * well.V0; ++it) {
                    const double c = 0.5 * (a + b);
                    const double fc = static_mismatch(well, l, c);
                    if (fa * fc <= 0.0) {
                        b = c;
                    } else {
                        a = c;
                        fa = fc;
                    }
                }
                out.push_back({l, 0.5 * (a + b)});
            }
            w0 = w1;
            f0 = f1;
        }
    }
    std::sort(out.begin(), out.end(), [](const BoundState& x, const BoundState& y) {
        return x.l != y.l ? x.l < y.l : x.omega < y.omega;
    });
    return out;
}

std::vector<Channel> conjugate_zeros(const FloquetSolution& sol) {
    std::vector<Channel> z = sol.exterior;
    for (auto& c : z) c.k = -c.k;
    return z;
}

} // namespace floq

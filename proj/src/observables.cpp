#include "floq/observables.hpp"

#include <algorithm>
#include <map>

namespace floq {

double EmissionDensity::f_theta(const EmissionShell& s, double theta) const {
    cplx amp{};
    for (const auto& [l1, b] : s.b_l1)
        amp += b * spherical_norm_N(l1, m) * legendre_p(l1, m, std::cos(theta));
    return (norm > 0.0) ? std::norm(amp) / norm : 0.0;
}

int EmissionDensity::dominant_channel() const {
    if (shells.empty()) return -1;
    std::size_t best = 0;
    for (std::size_t i = 1; i < shells.size(); ++i)
        if (shells[i].weight > shells[best].weight) best = i;
    return shells[best].j;
}

EmissionDensity emission_density(const FloquetSolution& sol) {
    EmissionDensity out;
    out.im_omega = sol.omega.imag();
    std::map<int, EmissionShell> by_j;
    for (std::size_t i = 0; i < sol.exterior.size(); ++i) {
        const Channel& ch = sol.exterior[i];
        // open and non-decaying: carries outgoing flux to infinity
        if (ch.k.real() <= eps_flux || ch.k.imag() > eps_flux) continue;
        EmissionShell& s = by_j[ch.fourier];
        s.j = ch.fourier;
        s.k_re = ch.k.real();
        s.b_l1.emplace_back(ch.l1, sol.b[static_cast<int>(i)]);
        s.weight += std::norm(sol.b[static_cast<int>(i)]);
    }
    for (auto& [j, s] : by_j) {
        out.norm += s.weight;
        out.shells.push_back(std::move(s));
    }
    if (out.norm > 0.0)
        for (auto& s : out.shells) s.weight /= out.norm;
    return out;
}

namespace {

// All Y_l^0 components of the pi-periodic wave at (r, t), l <= tab.max_l().
// sq_only drops the non-normalizable (outgoing/travelling) exterior channels.
std::vector<cplx> field_components(const SolveContext& ctx, const FloquetSolution& sol,
                                   const CouplingTables& tab, Side side, double r, double t,
                                   bool sq_only) {
    const int L = tab.max_l();
    const DriveWaveform drv = ctx.drive();
    std::vector<cplx> psi(L + 1, cplx{});
    const bool driven = (side == Side::exterior) || ctx.well.drive_inside();
    const Kernel kern = (side == Side::exterior) ? Kernel::h1 : Kernel::J;
    const auto& chans = (side == Side::exterior) ? sol.exterior : sol.interior;
    const VecC& coef = (side == Side::exterior) ? sol.b : sol.a;

    if (!driven) {
        for (std::size_t i = 0; i < chans.size(); ++i) {
            const Channel& ch = chans[i];
            if (ch.l1 > L) continue;
            psi[ch.l1] += coef[static_cast<int>(i)] *
                          std::exp(cplx{0.0, -2.0 * ch.fourier * t}) *
                          sph_bessel_j(ch.l1, ch.k * r);
        }
        return psi;
    }

    for (std::size_t i = 0; i < chans.size(); ++i) {
        const Channel& ch = chans[i];
        // open channels carry Im k ~ roundoff; eps_flux separates true decay
        if (sq_only && side == Side::exterior && ch.k.imag() <= eps_flux) continue;
        cplx scale = coef[static_cast<int>(i)] * std::exp(cplx{0.0, -2.0 * ch.fourier * t});
        if (side == Side::exterior)
            scale *= ch.flux_norm;
        else
            scale *= 0.5 * tab.norm_N(ch.l1) * ipow(-ch.l1);
        if (std::abs(scale) == 0.0) continue;
        // shared per-channel special-function arrays, then per-l coupling sums
        const cplx zF = drv.F(t) * ch.k;
        const double zFd = drv.Fdot(t) * r;
        const cplx zK = ch.k * r;
        std::vector<cplx> jF(L + 1), K(L + 1);
        std::vector<double> jfd(L + 1);
        for (int q = 0; q <= L; ++q) {
            jF[q] = sph_bessel_j(q, zF);
            jfd[q] = sph_bessel_j(q, cplx(zFd)).real();
            K[q] = kernel_eval(kern, q, zK);
        }
        for (int l = 0; l <= L; ++l) {
            cplx sum{};
            for (const auto& e : tab.c5_list(ch.l1, l)) sum += e.coef * jF[e.l2] * jfd[e.l4] * K[e.l3];
            psi[l] += scale * sum;
        }
    }
    if (!ctx.well.include_VF()) {
        // the V_F-omitted ansatz carries the oscillatory accumulated phase
        if (side == Side::exterior || ctx.well.drive_inside()) {
            const cplx ph = drv.phase_factor(t);
            for (auto& v : psi) v *= ph;
        }
    }
    return psi;
}

using Rule = std::pair<std::vector<double>, std::vector<double>>;

// integral over [a, b] of fn(psi(r), r) using a mapped Gauss-Legendre rule
template <typename Fn>
double panel_integral(const SolveContext& ctx, const FloquetSolution& sol,
                      const CouplingTables& tab, Side side, double t, bool sq_only, double a,
                      double b, int nodes, Fn&& fn) {
    const Rule& rule = GaussLegendre::rule(nodes);
    double acc = 0.0;
    for (int q = 0; q < nodes; ++q) {
        const double r = 0.5 * (a + b) + 0.5 * (b - a) * rule.first[q];
        const auto psi = field_components(ctx, sol, tab, side, r, t, sq_only);
        acc += 0.5 * (b - a) * rule.second[q] * fn(psi, r);
    }
    return acc;
}

} // namespace

RadialValue expectation_radial(const SolveContext& ctx, const FloquetSolution& sol,
                               OperatorKind kind, Region region, double t,
                               const RadialOptions& opt) {
    const CouplingTables& tab = *ctx.tables;
    const int L = tab.max_l();

    const auto weight = [&](const std::vector<cplx>& psi, double r) -> double {
        switch (kind) {
            case OperatorKind::identity: {
                double s = 0.0;
                for (int l = 0; l <= L; ++l) s += std::norm(psi[l]);
                return s * r * r;
            }
            case OperatorKind::Lsq: {
                double s = 0.0;
                for (int l = 0; l <= L; ++l) s += l * (l + 1.0) * std::norm(psi[l]);
                return s * r * r;
            }
            case OperatorKind::r_z: {
                double s = 0.0;
                for (int l = 0; l < L; ++l)
                    s += tab.p_coef(l, l + 1) * 2.0 * std::real(std::conj(psi[l]) * psi[l + 1]);
                return s * r * r * r;
            }
            case OperatorKind::r_bilinear_x:
            case OperatorKind::r_bilinear_y:
            case OperatorKind::r_bilinear_z: {
                const int axis = (kind == OperatorKind::r_bilinear_x)   ? 0
                                 : (kind == OperatorKind::r_bilinear_y) ? 1
                                                                        : 2;
                cplx s{};
                for (int l = 0; l <= L; ++l)
                    for (int lp : {l - 2, l, l + 2}) {
                        if (lp < 0 || lp > L) continue;
                        s += tab.q_coef(axis, l, lp) * std::conj(psi[l]) * psi[lp];
                    }
                return s.real() * r * r * r * r;
            }
        }
        return 0.0;
    };

    RadialValue out;
    if (region == Region::interior || region == Region::both) {
        out.value += panel_integral(ctx, sol, tab, Side::interior, t, true, 0.0, ctx.well.d,
                                    opt.nodes, weight);
    }
    if (region == Region::exterior || region == Region::both) {
        // slowest decay and fastest oscillation among retained components
        double kap_min = 1e30, k_abs = 1.0;
        for (const Channel& ch : sol.exterior) {
            if (ch.k.imag() > eps_flux) kap_min = std::min(kap_min, ch.k.imag());
            k_abs = std::max(k_abs, std::abs(ch.k));
        }
        if (kap_min > 1e29)
            throw std::invalid_argument("expectation_radial: no square-integrable exterior part");
        double r_max = opt.r_max;
        if (r_max <= 0.0) r_max = ctx.well.d + std::min(18.0 / kap_min, 300.0);
        // keep >= ~8 nodes per oscillation wavelength
        const double panel_len = std::max(2.0 * M_PI / k_abs * opt.nodes / 8.0, 0.5);
        double a = ctx.well.d;
        while (a < r_max) {
            const double b = std::min(a + panel_len, r_max);
            out.value += panel_integral(ctx, sol, tab, Side::exterior, t, true, a, b, opt.nodes,
                                        weight);
            a = b;
        }
        const auto psi_end = field_components(ctx, sol, tab, Side::exterior, r_max, t, true);
        out.tail = std::abs(weight(psi_end, r_max)) / (2.0 * kap_min);
    }
    return out;
}

double boundary_normalization(const SolveContext& ctx, const FloquetSolution& sol, double t) {
    if (ctx.well.drive_inside())
        throw std::invalid_argument(
            "boundary_normalization: interior channels are not eigenfunctions when driven");
    const double d = ctx.well.d;

    // u(r) = A r j_l(kappa(eps) r); eps is the interior Hamiltonian eigenvalue
    struct BoundaryU {
        cplx u, up;
    };
    const auto u_at_d = [&](cplx eps, int l, cplx A) -> BoundaryU {
        const cplx kap = std::sqrt(2.0 * (eps + ctx.well.V0));
        const cplx j = sph_bessel_j(l, kap * d);
        const cplx jp = kap * sph_bessel_j_deriv(l, kap * d);
        return {A * d * j, A * (j + d * jp)};
    };
    const auto bracket = [&](const BoundaryU& a, const BoundaryU& b) {
        return std::conj(a.u) * b.up - std::conj(b.u) * a.up;
    };

    double total = 0.0;
    const int n = static_cast<int>(sol.interior.size());
    for (int i = 0; i < n; ++i) {
        const Channel& ci = sol.interior[i];
        const cplx eps_i = sol.omega + 2.0 * ci.fourier;
        const cplx Ai = sol.a[i] * std::exp(cplx{0.0, -2.0 * ci.fourier * t});
        const BoundaryU ui = u_at_d(eps_i, ci.l1, Ai);
        for (int ip = i; ip < n; ++ip) {
            const Channel& cp = sol.interior[ip];
            if (cp.l1 != ci.l1) continue;
            const cplx eps_p = sol.omega + 2.0 * cp.fourier;
            const cplx Ap = sol.a[ip] * std::exp(cplx{0.0, -2.0 * cp.fourier * t});
            if (ip == i) {
                // diagonal: epsilon-limit by central differences + Richardson
                const auto diag = [&](double h) {
                    const BoundaryU um = u_at_d(eps_i - 0.5 * h, ci.l1, Ai);
                    const BoundaryU up = u_at_d(eps_i + 0.5 * h, ci.l1, Ai);
                    return 0.5 * (bracket(um, up) / (-h)).real();
                };
                const double h0 = 1e-4 * (1.0 + std::abs(eps_i));
                total += (4.0 * diag(0.5 * h0) - diag(h0)) / 3.0;
            } else {
                const double de = 2.0 * (ci.fourier - cp.fourier); // real by equal Im
                total += (bracket(ui, u_at_d(eps_p, cp.l1, Ap)) / de).real();
            }
        }
    }
    return total;
}

double residual_verify(const SolveContext& ctx, const FloquetSolution& sol,
                       const std::vector<std::array<double, 3>>& points) {
    const int L_eval = ctx.trunc.L_max + 6;
    const auto tab = CouplingTables::build(L_eval, ctx.well.m);
    const int L = tab->max_l();
    const int L_res = ctx.trunc.L_max + 4;
    const double d = ctx.well.d;
    const double hr = 1e-3, ht = 5e-4;
    const double F2 = ctx.F2;
    const cplx iu{0.0, 1.0};

    double worst = 0.0;
    for (const auto& pt : points) {
        double r = pt[0];
        const double theta = pt[1], t = pt[2];
        // keep the radial stencil strictly on one side of the boundary
        if (r < d && r > d - 3.0 * hr) r = d - 3.0 * hr;
        if (r >= d && r < d + 3.0 * hr) r = d + 3.0 * hr;
        if (r < 3.0 * hr) r = 3.0 * hr;
        const Side side = (r < d) ? Side::interior : Side::exterior;

        // 5x5 stencil of all field components
        std::vector<cplx> f[5][5];
        for (int it = -2; it <= 2; ++it)
            for (int ir = -2; ir <= 2; ++ir)
                f[it + 2][ir + 2] =
                    field_components(ctx, sol, *tab, side, r + ir * hr, t + it * ht, false);

        const bool drive_on = (side == Side::exterior) || ctx.well.drive_inside();
        const double vwell = (side == Side::interior) ? -ctx.well.V0 : 0.0;
        const double vf = (drive_on && ctx.well.include_VF())
                              ? -2.0 * F2 * F2 * std::sin(2.0 * t) * std::sin(2.0 * t)
                              : 0.0;
        const double gdrive = drive_on ? 4.0 * F2 * std::cos(2.0 * t) * r : 0.0;

        cplx res_total{};
        double denom = 0.0;
        const double w = std::cos(theta);
        const int mq = ctx.well.m;
        for (int l = mq; l <= L_res; ++l) {
            const auto& c = f[2];
            const cplx psi = c[2][l];
            const cplx dpsidr =
                (-c[4][l] + 8.0 * c[3][l] - 8.0 * c[1][l] + c[0][l]) / (12.0 * hr);
            const cplx d2psidr2 = (-c[4][l] + 16.0 * c[3][l] - 30.0 * c[2][l] + 16.0 * c[1][l] -
                                   c[0][l]) /
                                  (12.0 * hr * hr);
            const cplx dpsidt = (-f[4][2][l] + 8.0 * f[3][2][l] - 8.0 * f[1][2][l] + f[0][2][l]) /
                                (12.0 * ht);
            const cplx kin =
                0.5 * (d2psidr2 + 2.0 / r * dpsidr - l * (l + 1.0) / (r * r) * psi);
            // cos(theta) Y_l^m = A_l Y_{l+1}^m + A_{l-1} Y_{l-1}^m
            const auto A = [mq](int ll) {
                return std::sqrt(((ll + 1.0) * (ll + 1.0) - mq * mq) /
                                 ((2.0 * ll + 1.0) * (2.0 * ll + 3.0)));
            };
            const cplx coupling = gdrive * ((l > 0 ? A(l - 1) * f[2][2][l - 1] : cplx{}) +
                                            (l < L ? A(l) * f[2][2][l + 1] : cplx{}));
            const cplx res_l =
                sol.omega * psi + iu * dpsidt + kin - (vwell + vf) * psi - coupling;
            const double Y = spherical_norm_N(l, mq) * legendre_p(l, mq, w);
            res_total += res_l * Y;
            // pre-cancellation magnitudes: the scale finite differences act on
            denom += (std::abs(sol.omega * psi) + std::abs(dpsidt) + 0.5 * std::abs(d2psidr2) +
                      std::abs(dpsidr / r) + 0.5 * l * (l + 1.0) / (r * r) * std::abs(psi) +
                      std::abs((vwell + vf) * psi) + std::abs(coupling) + 1e-300) *
                     std::abs(Y);
        }
        if (denom > 0.0) worst = std::max(worst, std::abs(res_total) / denom);
    }
    return worst;
}

} // namespace floq

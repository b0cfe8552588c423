#include "floq/waves.hpp"

#include <algorithm>
#include <cassert>
#include <map>

namespace floq {

cplx kernel_eval(Kernel a, int l, cplx z) {
    switch (a) {
        case Kernel::h1: return sph_hankel(1, l, z);
        case Kernel::h2: return sph_hankel(2, l, z);
        case Kernel::J: return sph_bessel_j(l, z);
    }
    throw std::logic_error("unreachable");
}

cplx kernel_deriv(Kernel a, int l, cplx z) {
    switch (a) {
        case Kernel::h1: return sph_hankel_deriv(1, l, z);
        case Kernel::h2: return sph_hankel_deriv(2, l, z);
        case Kernel::J: return sph_bessel_j_deriv(l, z);
    }
    throw std::logic_error("unreachable");
}

namespace {

int effective_lsum(const CouplingTables& tables, int l_sum) {
    if (l_sum < 0 || l_sum > tables.max_l()) return tables.max_l();
    return l_sum;
}

} // namespace

cplx radial_wave(const CouplingTables& tables, Kernel a, const DriveWaveform& drive,
                 cplx k, int l1, int l, double r, double t, int l_sum) {
    const int ls = effective_lsum(tables, l_sum);
    const cplx zF = drive.F(t) * k;
    const double zFd = drive.Fdot(t) * r;
    const cplx zK = k * r;
    std::vector<cplx> jF(ls + 1), K(ls + 1);
    std::vector<double> jfd(ls + 1);
    for (int i = 0; i <= ls; ++i) {
        jF[i] = sph_bessel_j(i, zF);
        jfd[i] = sph_bessel_j(i, cplx(zFd)).real();
        K[i] = kernel_eval(a, i, zK);
    }
    cplx sum{};
    for (const auto& e : tables.c5_list(l1, l)) {
        if (e.l2 > ls || e.l3 > ls || e.l4 > ls) continue;
        sum += e.coef * jF[e.l2] * jfd[e.l4] * K[e.l3];
    }
    return sum;
}

cplx radial_wave_derivative(const CouplingTables& tables, Kernel a, const DriveWaveform& drive,
                            cplx k, int l1, int l, double r, double t, int l_sum) {
    const int ls = effective_lsum(tables, l_sum);
    const double Fd = drive.Fdot(t);
    const cplx zF = drive.F(t) * k;
    const double zFd = Fd * r;
    const cplx zK = k * r;
    std::vector<cplx> jF(ls + 1), K(ls + 2);
    std::vector<double> jfd(ls + 2);
    for (int i = 0; i <= ls; ++i) jF[i] = sph_bessel_j(i, zF);
    for (int i = 0; i <= ls + 1; ++i) {
        jfd[i] = sph_bessel_j(i, cplx(zFd)).real();
        K[i] = kernel_eval(a, i, zK);
    }
    // d/dr [ j_{l4}(Fd r) K_{l3}(k r) ] via f_l'(z) = -f_{l+1}(z) + (l/z) f_l(z),
    // written so the Fd -> 0 and k -> anything limits stay finite.
    cplx sum{};
    for (const auto& e : tables.c5_list(l1, l)) {
        if (e.l2 > ls || e.l3 > ls || e.l4 > ls) continue;
        const cplx rad = (-Fd * jfd[e.l4 + 1] + (e.l4 / r) * jfd[e.l4]) * K[e.l3] +
                         jfd[e.l4] * ((e.l3 / r) * K[e.l3] - k * K[e.l3 + 1]);
        sum += e.coef * jF[e.l2] * rad;
    }
    return sum;
}

FourierBlocks::FourierBlocks(int nchan, int L, int P)
    : nchan_(nchan), L_(L), P_(P),
      d_(static_cast<std::size_t>(nchan) * (L + 1) * (2 * P + 1)),
      g_(d_.size()) {}

namespace {

// Channel-independent pieces of the (l1, l) sum, collapsed over l4:
//   A_{l2,l3}(t) = sum_{l4} c j_{l4}(Fd d)
//   B_{l2,l3}(t) = sum_{l4} c [ -Fd j_{l4+1}(Fd d) + (l4/d) j_{l4}(Fd d) ]
struct PairAB {
    int l2, l3;
    std::vector<cplx> A, B;
};

std::vector<PairAB> build_ab(const CouplingTables& tables, int l1, int l, int ls,
                             std::span<const std::vector<double>> jfd,
                             std::span<const double> Fd, double d_radius, int N) {
    std::map<std::pair<int, int>, int> slot;
    std::vector<PairAB> out;
    for (const auto& e : tables.c5_list(l1, l)) {
        if (e.l2 > ls || e.l3 > ls || e.l4 > ls) continue;
        auto [it, fresh] = slot.try_emplace({e.l2, e.l3}, static_cast<int>(out.size()));
        if (fresh) {
            out.push_back({e.l2, e.l3, std::vector<cplx>(N), std::vector<cplx>(N)});
        }
        PairAB& p = out[it->second];
        for (int s = 0; s < N; ++s) {
            p.A[s] += e.coef * jfd[e.l4][s];
            p.B[s] += e.coef * (-Fd[s] * jfd[e.l4 + 1][s] + (e.l4 / d_radius) * jfd[e.l4][s]);
        }
    }
    return out;
}

} // namespace

FourierBlocks driven_blocks(const CouplingTables& tables, const DriveWaveform& drive,
                            Kernel kind, std::span<const Channel> channels,
                            std::span<const cplx> scales, double d_radius,
                            const TruncationScheme& trunc, bool phased) {
    assert(channels.size() == scales.size());
    const int L = trunc.L_max;
    const int P = trunc.J_neg + trunc.J_pos;
    const int ls = tables.max_l();
    const int nc = static_cast<int>(channels.size());
    if (L > ls) throw std::invalid_argument("driven_blocks: L_max exceeds table size");

    constexpr double alias_tol = 1e-8;
    constexpr int n_t_cap = 4096;

    for (int N = std::max(trunc.N_t, 4 * (P + 1));; N *= 2) {
        FourierBlocks out(nc, L, P);
        out.n_t_used = N;

        std::vector<double> F(N), Fd(N);
        std::vector<cplx> phase(N, cplx(1.0, 0.0));
        for (int s = 0; s < N; ++s) {
            const double t = M_PI * s / N;
            F[s] = drive.F(t);
            Fd[s] = drive.Fdot(t);
            if (phased) phase[s] = drive.phase_factor(t);
        }
        std::vector<std::vector<double>> jfd(ls + 2, std::vector<double>(N));
        for (int i = 0; i <= ls + 1; ++i)
            for (int s = 0; s < N; ++s)
                jfd[i][s] = sph_bessel_j(i, cplx(Fd[s] * d_radius)).real();

        std::vector<cplx> twiddle(N);
        for (int m = 0; m < N; ++m)
            twiddle[m] = std::exp(cplx(0.0, 2.0 * M_PI * m / N));

        // (l1, l) -> collapsed A/B tables, built on first use.
        std::map<std::pair<int, int>, std::vector<PairAB>> ab_cache;
        // fourier index -> sampled j_{l2}(F(t) k) and boundary kernels (k depends
        // on the fourier index only).
        struct KData {
            std::vector<std::vector<cplx>> jF; // [l2][s]
            std::vector<cplx> K;               // [l3]
            cplx k;
        };
        std::map<int, KData> kcache;

        double max_d = 0.0, max_g = 0.0, probe_d = 0.0, probe_g = 0.0;
        std::vector<cplx> vals(N), ders(N);
        const int probes[2] = {N / 2, 1 - N / 2};

        for (int c = 0; c < nc; ++c) {
            const cplx k = channels[c].k;
            auto [kit, fresh] = kcache.try_emplace(channels[c].fourier);
            KData& kd = kit->second;
            if (fresh || kd.k != k) {
                kd.k = k;
                kd.jF.assign(ls + 1, std::vector<cplx>(N));
                kd.K.assign(ls + 2, cplx{});
                for (int s = 0; s < N; ++s) {
                    const cplx z = F[s] * k;
                    for (int i = 0; i <= ls; ++i) kd.jF[i][s] = sph_bessel_j(i, z);
                }
                for (int i = 0; i <= ls + 1; ++i) kd.K[i] = kernel_eval(kind, i, k * d_radius);
            }
            for (int l = 0; l <= L; ++l) {
                auto [abit, abfresh] = ab_cache.try_emplace({channels[c].l1, l});
                if (abfresh)
                    abit->second = build_ab(tables, channels[c].l1, l, ls, jfd, Fd, d_radius, N);
                const auto& pairs = abit->second;

                std::fill(vals.begin(), vals.end(), cplx{});
                std::fill(ders.begin(), ders.end(), cplx{});
                for (const PairAB& p : pairs) {
                    const cplx Kv = kd.K[p.l3];
                    const cplx Kfac = (p.l3 / d_radius) * Kv - k * kd.K[p.l3 + 1];
                    const auto& jF = kd.jF[p.l2];
                    for (int s = 0; s < N; ++s) {
                        const cplx jf = jF[s];
                        vals[s] += jf * p.A[s] * Kv;
                        ders[s] += jf * (p.B[s] * Kv + p.A[s] * Kfac);
                    }
                }
                for (int s = 0; s < N; ++s) {
                    const cplx ph = phase[s] * scales[c];
                    vals[s] *= ph;
                    ders[s] *= ph;
                }
                auto bin = [&](std::span<const cplx> f, int p) {
                    cplx acc{};
                    for (int s = 0; s < N; ++s)
                        acc += f[s] * twiddle[((p * s) % N + N) % N];
                    return acc / static_cast<double>(N);
                };
                for (int p = -P; p <= P; ++p) {
                    const cplx dv = bin(vals, p);
                    const cplx gv = bin(ders, p);
                    out.dref(c, l, p) = dv;
                    out.gref(c, l, p) = gv;
                    max_d = std::max(max_d, std::abs(dv));
                    max_g = std::max(max_g, std::abs(gv));
                }
                for (int p : probes) {
                    probe_d = std::max(probe_d, std::abs(bin(vals, p)));
                    probe_g = std::max(probe_g, std::abs(bin(ders, p)));
                }
            }
        }

        double ratio = 0.0;
        if (max_d > 0.0) ratio = probe_d / max_d;
        if (max_g > 0.0) ratio = std::max(ratio, probe_g / max_g);
        out.alias_ratio = ratio;
        if (ratio <= alias_tol) return out;
        if (2 * N > n_t_cap)
            throw truncation_error("driven_blocks: aliasing persists at N_t cap, ratio " +
                                   std::to_string(ratio));
    }
}

InteriorBasisValue interior_basis(cplx kappa, int l, double d_radius) {
    const cplx z = kappa * d_radius;
    return {sph_bessel_j(l, z), kappa * sph_bessel_j_deriv(l, z)};
}

} // namespace floq

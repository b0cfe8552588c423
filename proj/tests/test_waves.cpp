#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "floq/waves.hpp"

using namespace floq;

TEST_CASE("undriven limit collapses to a single hankel term") {
    auto tab = CouplingTables::build(6, 0);
    const DriveWaveform off{0.0, true};
    const cplx k{0.8, 0.3};
    const double r = 1.3, t = 0.37;
    for (int l1 = 0; l1 <= 3; ++l1) {
        for (int l = 0; l <= 4; ++l) {
            const cplx got = radial_wave(*tab, Kernel::h1, off, k, l1, l, r, t);
            const cplx want = (l == l1)
                                  ? 2.0 * ipow(l1) * sph_hankel(1, l1, k * r) / spherical_norm_N(l1, 0)
                                  : cplx{};
            CHECK(std::abs(got - want) < 1e-12 * (1.0 + std::abs(want)));
        }
    }
}

TEST_CASE("radial derivative matches finite differences") {
    auto tab = CouplingTables::build(8, 0);
    const DriveWaveform drive{0.45, true};
    const cplx k{1.1, -0.25};
    const double h = 1e-5;
    for (Kernel a : {Kernel::h1, Kernel::h2, Kernel::J}) {
        for (double t : {0.0, 0.6, M_PI / 4}) {
            for (int l1 : {0, 1}) {
                for (int l : {0, 1, 2, 3}) {
                    const double r = 1.4;
                    const cplx fd = (radial_wave(*tab, a, drive, k, l1, l, r + h, t) -
                                     radial_wave(*tab, a, drive, k, l1, l, r - h, t)) /
                                    (2.0 * h);
                    const cplx an = radial_wave_derivative(*tab, a, drive, k, l1, l, r, t);
                    CHECK(std::abs(an - fd) < 1e-6 * (1.0 + std::abs(an)));
                }
            }
        }
    }
}

TEST_CASE("fourier blocks match direct time quadrature") {
    auto tab = CouplingTables::build(5, 0);
    const DriveWaveform drive{0.3, true};
    const double d = 1.2;
    std::vector<Channel> ch = {{0, 0, cplx{0.9, 0.12}, 1.0}, {1, 1, cplx{1.7, -0.05}, 1.0}};
    std::vector<cplx> scales = {cplx{1.0, 0.0}, cplx{2.0, 1.0}};
    TruncationScheme tr;
    tr.J_neg = 2;
    tr.J_pos = 2;
    tr.L_max = 5;
    tr.N_t = 32;
    for (bool phased : {false, true}) {
        const auto blocks =
            driven_blocks(*tab, drive, Kernel::h1, ch, scales, d, tr, phased);
        const int M = 512;
        for (int c : {0, 1}) {
            for (int l : {0, 1, 3, 5}) {
                for (int p = -blocks.P(); p <= blocks.P(); ++p) {
                    cplx dv{}, gv{};
                    for (int s = 0; s < M; ++s) {
                        const double t = M_PI * s / M;
                        cplx ph = scales[c] * std::exp(cplx{0.0, 2.0 * p * t});
                        if (phased) ph *= drive.phase_factor(t);
                        dv += ph * radial_wave(*tab, Kernel::h1, drive, ch[c].k, ch[c].l1, l, d, t);
                        gv += ph * radial_wave_derivative(*tab, Kernel::h1, drive, ch[c].k,
                                                          ch[c].l1, l, d, t);
                    }
                    dv /= M;
                    gv /= M;
                    CHECK(std::abs(blocks.dcoef(c, l, p) - dv) < 1e-10 * (1.0 + std::abs(dv)));
                    CHECK(std::abs(blocks.gcoef(c, l, p) - gv) < 1e-10 * (1.0 + std::abs(gv)));
                    // checkerboard: p + l + l1 odd has no weight
                    if ((p + l + ch[c].l1) % 2 != 0)
                        CHECK(std::abs(blocks.dcoef(c, l, p)) < 1e-13);
                }
            }
        }
    }
}

TEST_CASE("aliasing doubles the sampling") {
    auto tab = CouplingTables::build(8, 0);
    const DriveWaveform drive{2.5, true};
    std::vector<Channel> ch = {{0, 0, cplx{6.0, 0.0}, 1.0}};
    std::vector<cplx> scales = {cplx{1.0, 0.0}};
    TruncationScheme tr;
    tr.J_neg = 1;
    tr.J_pos = 1;
    tr.L_max = 8;
    tr.N_t = 8;
    const auto blocks = driven_blocks(*tab, drive, Kernel::h1, ch, scales, 1.2, tr, false);
    CHECK(blocks.n_t_used > 8);
    CHECK(blocks.alias_ratio <= 1e-8);
}

TEST_CASE("interior basis values") {
    const cplx kappa{2.3, 0.1};
    const double d = 0.9;
    for (int l = 0; l <= 4; ++l) {
        const auto v = interior_basis(kappa, l, d);
        CHECK(std::abs(v.c - sph_bessel_j(l, kappa * d)) < 1e-14);
        const double h = 1e-6;
        const cplx fd =
            (sph_bessel_j(l, kappa * (d + h)) - sph_bessel_j(l, kappa * (d - h))) / (2.0 * h);
        CHECK(std::abs(v.f - fd) < 1e-7 * (1.0 + std::abs(fd)));
    }
}

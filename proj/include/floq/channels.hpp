#ifndef FLOQ_CHANNELS_HPP
#define FLOQ_CHANNELS_HPP

#include <cmath>
#include <stdexcept>

#include "floq/specfun.hpp"

namespace floq {

/// Axial harmonic drive F^pi(t) = F2 cos 2t (period pi) together with the
/// frame term V_F = -1/2 Fdot^2 and the accumulated-phase bookkeeping used
/// by the V_F-omitted potential variants.
struct DriveWaveform {
    double F2 = 0.0;
    bool include_VF = true;

    double F(double t) const { return F2 * std::cos(2.0 * t); }
    double Fdot(double t) const { return -2.0 * F2 * std::sin(2.0 * t); }
    double Fddot(double t) const { return -4.0 * F2 * std::cos(2.0 * t); }
    double VF(double t) const { return -0.5 * Fdot(t) * Fdot(t); }

    /// g_F(t) = int^t (1/2) Fdot^2 dt' = secular_rate * t + g_osc(t)
    double secular_rate() const { return F2 * F2; }
    double g_osc(double t) const { return -(F2 * F2 / 4.0) * std::sin(4.0 * t); }

    /// e^{-i g_osc(t)}: multiplies pi-periodic wave samples when V_F is omitted
    /// from the potential (the secular part is absorbed as a momentum shift).
    cplx phase_factor(double t) const { return std::exp(cplx(0.0, -g_osc(t))); }

    /// Momentum-relation shift applied where V_F is omitted.
    double momentum_shift() const { return include_VF ? 0.0 : F2 * F2; }
};

/// Square well of depth V0 and radius d, universal parameter A = -sqrt(2 V0 d^2),
/// with the potential-variant selector p:
///   p=1: drive truncated outside the well, V_F kept
///   p=2: drive everywhere, V_F kept
///   p=3,4: same with V_F omitted
struct WellModel {
    double V0 = 0.0;
    double d = 0.0;
    double A = 0.0;
    int variant = 1;
    int m = 0;

    bool drive_inside() const { return variant == 2 || variant == 4; }
    bool include_VF() const { return variant == 1 || variant == 2; }

    static WellModel from_A(double A_over_pi, double V0, int variant = 1);
    static WellModel from_d(double V0, double d, int variant = 1);
};

enum class Side { interior, exterior };
enum class BoundaryKind { closed, emission_open, capture_open };

/// Branch-resolved square root of energy2 = 2(omega + 2j [+V0] [-F2^2]) at the
/// start of a continuation. Throws at an exact threshold.
cplx channel_momentum_init(cplx energy2, BoundaryKind kind);
cplx channel_momentum_init(cplx omega, int j, Side side, const WellModel& well,
                           const DriveWaveform& drive, BoundaryKind kind);

/// Continuous Riemann-sheet tracking: of the two roots of energy2, the one
/// nearer previous_k. Throws a step-size error when the two are indistinguishable.
cplx channel_momentum_track(cplx previous_k, cplx energy2);

struct step_size_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct threshold_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double eps_flux = 1e-9;

/// N_{2j,l1}^m = sqrt(|Re k|) N_{l1}^m for flux-carrying channels,
/// N_{l1}^m for evanescent ones.
double flux_normalization(cplx k, int l1, int m);

/// One exterior Fourier x angular-momentum channel of a solve.
struct Channel {
    int fourier = 0; // j (exterior) or n (interior)
    int l1 = 0;
    cplx k{};
    double flux_norm = 1.0;
};

inline cplx channel_energy2(cplx omega, int j, Side side, const WellModel& well,
                            const DriveWaveform& drive) {
    // The g_F secular rate shifts the momentum relation only in regions where
    // the drive acts but V_F has been dropped (exterior for p=3,4; interior for p=4).
    double shift = 0.0;
    if (!well.include_VF()) {
        if (side == Side::exterior || well.drive_inside()) shift = drive.F2 * drive.F2;
    }
    cplx e = 2.0 * (omega + 2.0 * j - shift);
    if (side == Side::interior) e += 2.0 * well.V0;
    return e;
}

} // namespace floq

#endif

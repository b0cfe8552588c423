#ifndef FLOQ_WAVES_HPP
#define FLOQ_WAVES_HPP

#include <span>
#include <vector>

#include "floq/channels.hpp"
#include "floq/specfun.hpp"

namespace floq {

enum class Kernel { h1 = 1, h2 = 2, J = 3 };

cplx kernel_eval(Kernel a, int l, cplx z);
cplx kernel_deriv(Kernel a, int l, cplx z);

/// Finite truncation of the Fourier x angular expansion.
struct TruncationScheme {
    int J_neg = 6;  ///< Fourier indices run over [-J_neg, J_pos]
    int J_pos = 6;
    int L_max = 8;  ///< cutoff for l, l1 and the internal sums l2, l3, l4
    int N_t = 64;   ///< time samples per period (power of two)
    int parity = +1; ///< (-1)^{j+l1} sector
};

/// R^{(a)}_{2j,l1,l}(r,t) = sum_{l2,l3,l4} c_{l1,l2,l3,l4,l}
///     j_{l2}(F(t) k) j_{l4}(Fdot(t) r) K^{(a)}_{l3}(k r),
/// with K the spherical Hankel of the requested kind, or j for kernel J.
/// Internal sums run to `l_sum` (defaults to tables.max_l()).
cplx radial_wave(const CouplingTables& tables, Kernel a, const DriveWaveform& drive,
                 cplx k, int l1, int l, double r, double t, int l_sum = -1);

/// d/dr of radial_wave.
cplx radial_wave_derivative(const CouplingTables& tables, Kernel a, const DriveWaveform& drive,
                            cplx k, int l1, int l, double r, double t, int l_sum = -1);

struct truncation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fourier coefficients (in e^{-i 2 p t}) of the pi-periodic boundary values
/// phi^pi(d, t) and d_r phi^pi(d, t), one block column per channel.
class FourierBlocks {
public:
    FourierBlocks(int nchan, int L, int P);

    cplx dcoef(int chan, int l, int p) const {
        if (p < -P_ || p > P_) return {};
        return d_[offset(chan, l, p)];
    }
    cplx gcoef(int chan, int l, int p) const {
        if (p < -P_ || p > P_) return {};
        return g_[offset(chan, l, p)];
    }
    int P() const { return P_; }
    int L() const { return L_; }
    int nchan() const { return nchan_; }
    int n_t_used = 0;
    double alias_ratio = 0.0;

    cplx& dref(int chan, int l, int p) { return d_[offset(chan, l, p)]; }
    cplx& gref(int chan, int l, int p) { return g_[offset(chan, l, p)]; }

private:
    std::size_t offset(int chan, int l, int p) const {
        return (static_cast<std::size_t>(chan) * (L_ + 1) + l) * (2 * P_ + 1) + (p + P_);
    }
    int nchan_, L_, P_;
    std::vector<cplx> d_, g_;
};

/// Assemble the Fourier blocks of the driven waves at r = d for the given
/// channel set. `scales` multiplies each channel column (flux normalization
/// outside, the F2->0 gauge inside). `phased` applies e^{-i g_osc(t)} to the
/// samples (V_F-omitted variants). N_t doubles automatically when aliasing
/// is detected.
FourierBlocks driven_blocks(const CouplingTables& tables, const DriveWaveform& drive,
                            Kernel kind, std::span<const Channel> channels,
                            std::span<const cplx> scales, double d_radius,
                            const TruncationScheme& trunc, bool phased);

/// Undriven interior basis values at r = d (variants p in {1,3}):
/// c_{2n,l} = j_l(kappa_{2n} d), f_{2n,l} = d_r j_l(kappa_{2n} r)|_d.
struct InteriorBasisValue {
    cplx c, f;
};
InteriorBasisValue interior_basis(cplx kappa, int l, double d_radius);

} // namespace floq

#endif

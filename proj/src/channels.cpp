#include "floq/channels.hpp"

namespace floq {

WellModel WellModel::from_A(double A_over_pi, double V0, int variant) {
    if (V0 <= 0.0) throw std::invalid_argument("WellModel: V0 must be positive");
    if (A_over_pi >= 0.0) throw std::invalid_argument("WellModel: A/pi must be negative");
    WellModel w;
    w.V0 = V0;
    w.A = A_over_pi * M_PI;
    w.d = std::abs(w.A) / std::sqrt(2.0 * V0);
    w.variant = variant;
    return w;
}

WellModel WellModel::from_d(double V0, double d, int variant) {
    if (V0 <= 0.0) throw std::invalid_argument("WellModel: V0 must be positive");
    if (d <= 0.0) throw std::invalid_argument("WellModel: d must be positive");
    WellModel w;
    w.V0 = V0;
    w.d = d;
    w.A = -std::sqrt(2.0 * V0 * d * d);
    w.variant = variant;
    return w;
}

cplx channel_momentum_init(cplx energy2, BoundaryKind kind) {
    if (energy2 == 0.0)
        throw threshold_error("channel_momentum_init: exactly at threshold, perturb omega");
    cplx root = std::sqrt(energy2); // principal: Re >= 0
    switch (kind) {
        case BoundaryKind::closed:
            // Im k > 0, exponentially decaying.
            if (root.imag() < 0.0 || (root.imag() == 0.0 && root.real() < 0.0)) root = -root;
            return root;
        case BoundaryKind::emission_open:
            // Re k > 0 (outgoing); Im k follows the sign of Im omega.
            if (root.real() < 0.0) root = -root;
            if (root.real() == 0.0 && root.imag() > 0.0) root = -root;
            return root;
        case BoundaryKind::capture_open:
            // Re k < 0, Im k <= 0 (incoming, diverging for Im omega > 0).
            {
                cplx em = channel_momentum_init(energy2, BoundaryKind::emission_open);
                return -std::conj(em);
            }
    }
    throw std::logic_error("unreachable");
}

cplx channel_momentum_init(cplx omega, int j, Side side, const WellModel& well,
                           const DriveWaveform& drive, BoundaryKind kind) {
    return channel_momentum_init(channel_energy2(omega, j, side, well, drive), kind);
}

cplx channel_momentum_track(cplx previous_k, cplx energy2) {
    const cplx root = std::sqrt(energy2);
    const double d1 = std::abs(root - previous_k);
    const double d2 = std::abs(-root - previous_k);
    const double scale = std::max(std::abs(root), std::abs(previous_k));
    if (std::abs(d1 - d2) < 1e-12 * std::max(scale, 1.0))
        throw step_size_error("channel_momentum_track: roots equidistant, halve the step");
    return (d1 < d2) ? root : -root;
}

double flux_normalization(cplx k, int l1, int m) {
    const double re = std::abs(k.real());
    const double nl = spherical_norm_N(l1, m);
    if (re > eps_flux) return std::sqrt(re) * nl;
    return nl;
}

} // namespace floq

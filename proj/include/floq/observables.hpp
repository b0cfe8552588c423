#ifndef FLOQ_OBSERVABLES_HPP
#define FLOQ_OBSERVABLES_HPP

#include <array>

#include "floq/matching.hpp"

namespace floq {

/// Momentum distribution of the radiated wave: a sum of discrete
/// momentum shells delta(k - Re k_{2j}) carrying angular profiles
/// |sum_{l1} b_{2j,l1} Y_{l1}^m|^2 / norm over the open non-decaying channels.
struct EmissionShell {
    int j = 0;
    double k_re = 0.0;
    std::vector<std::pair<int, cplx>> b_l1; ///< (l1, coefficient)
    double weight = 0.0;                    ///< integrated shell probability
};

struct EmissionDensity {
    std::vector<EmissionShell> shells;
    double norm = 0.0; ///< normalization making the weights sum to 1
    int m = 0;
    double im_omega = 0.0; ///< rate factor for the Im(omega)-scaled variant

    bool empty() const { return shells.empty(); }
    /// angular profile of one shell: |sum_l1 b Y_l1^m(theta)|^2 / norm
    double f_theta(const EmissionShell& s, double theta) const;
    /// shell with the largest weight; -1 when empty
    int dominant_channel() const;
};

EmissionDensity emission_density(const FloquetSolution& sol);

enum class OperatorKind {
    identity,     ///< J0[1]
    Lsq,          ///< J0[L^2]
    r_z,          ///< J1[r], z-component
    r_bilinear_x, ///< J2[x^2]
    r_bilinear_y,
    r_bilinear_z, ///< J2[z^2]
};
enum class Region { interior, exterior, both };

struct RadialValue {
    double value = 0.0;
    double tail = 0.0; ///< estimated remainder beyond the exterior cutoff
};

struct RadialOptions {
    int nodes = 64;        ///< Gauss-Legendre nodes per radial segment
    double r_max = 0.0;    ///< exterior cutoff; 0 = automatic from min Im k
    int segments = 6;      ///< exterior panel count
    double o_power = 1.0;  ///< unused hook for custom radial weights
};

/// Unnormalized radial expectation functionals at time t; divide by
/// the identity value for physical expectation values. Exterior integrals
/// run over the square-integrable components only.
RadialValue expectation_radial(const SolveContext& ctx, const FloquetSolution& sol,
                               OperatorKind kind, Region region, double t,
                               const RadialOptions& opt = {});

/// Interior norm contribution evaluated from boundary data alone
/// (undriven-interior variants): 2 Re int phi1* phi2 r^2 dr =
/// (e1-e2)^{-1} Re{u1* u2' - u2* u1'}|_d, with the diagonal epsilon-limit
/// taken by Richardson-extrapolated finite differences.
double boundary_normalization(const SolveContext& ctx, const FloquetSolution& sol, double t);

/// Max relative residual of i d_t phi - H phi over the sample points
/// (r, theta, t), finite differences in r and t, exact angular terms.
/// Internal partial-wave sums are evaluated with an enlarged cutoff.
double residual_verify(const SolveContext& ctx, const FloquetSolution& sol,
                       const std::vector<std::array<double, 3>>& points);

} // namespace floq

#endif

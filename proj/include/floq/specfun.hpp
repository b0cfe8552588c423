#ifndef FLOQ_SPECFUN_HPP
#define FLOQ_SPECFUN_HPP

#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

namespace floq {

using cplx = std::complex<double>;

/// Spherical Bessel function j_l(z) for complex argument.
/// Ascending power series below the recurrence crossover, upward
/// recurrence from the closed forms j_0, j_1 otherwise. j_l(0) = delta_{l,0}.
cplx sph_bessel_j(int l, cplx z);

/// Spherical Hankel function h_l^{(1)} (kind=1) or h_l^{(2)} (kind=2),
/// from the terminating closed-form expansion. Throws std::domain_error at z=0.
cplx sph_hankel(int kind, int l, cplx z);

/// d/dz of j_l / h_l^{(a)} via the standard recurrence.
cplx sph_bessel_j_deriv(int l, cplx z);
cplx sph_hankel_deriv(int kind, int l, cplx z);

/// Associated Legendre P_l^m(x) with the Condon-Shortley (-1)^m sign.
double legendre_p(int l, int m, double x);

/// N_l^m = (-1)^m sqrt((2l+1)/4pi) sqrt((l-m)!/(l+m)!), so that
/// Y_l^m = N_l^m P_l^m(cos th) e^{i m phi} is orthonormal.
double spherical_norm_N(int l, int m);

/// Gauss-Legendre nodes/weights on [-1,1], cached per node count.
struct GaussLegendre {
    static const std::pair<std::vector<double>, std::vector<double>>& rule(int n);
};

/// Overlap of three (associated) Legendre polynomials with the bracketed
/// prefactor inverse:
///   W = [(2(l3+m3)!)/((2l3+1)(l3-m3)!)]^{-1} * int_{-1}^{1} P_{l1}^{m1} P_{l2}^{m2} P_{l3}^{m3} dw
/// Computed by Gauss-Legendre quadrature, exact for even total m.
double triple_overlap_W(int l1, int m1, int l2, int m2, int l3, int m3, int nodes = 0);

/// Static angular coupling data shared by every expansion, precomputed once
/// per (max_l, m) and read-only afterwards.
class CouplingTables {
public:
    struct C5Entry {
        int l2, l3, l4;
        cplx coef;
    };

    static std::shared_ptr<const CouplingTables> build(int max_l, int m);

    int max_l() const { return max_l_; }
    int m() const { return m_; }

    /// W(P_{l1}, P_{l2}, P_{l3}^m)
    double w3(int l1, int l2, int l3) const { return W1_[idx3(l1, l2, l3)]; }
    /// W(P_{l3}^m, P_{l4}, P_l^m)
    double wm(int l3, int l4, int l) const { return W2_[idx3(l3, l4, l)]; }

    /// c_{l1,l2,l3} = 2 (2l2+1) (-i)^{l2} i^{l3-m} W(P_{l1}, P_{l2}, P_{l3}^m)
    cplx c3(int l1, int l2, int l3) const;
    /// c_{l1,l2,l3,l4,l} = c_{l1,l2,l3} (2l4+1) i^{l4} W(P_{l3}^m, P_{l4}, P_l^m) / N_l^m
    cplx c5(int l1, int l2, int l3, int l4, int l) const;

    /// Nonzero c5 terms for a fixed (l1, l) pair, internal indices <= max_l.
    const std::vector<C5Entry>& c5_list(int l1, int l) const;

    double norm_N(int l) const { return N_[l]; }

    /// p_{l,l'} = 2pi N_l N_l' int w P_l P_l' dw   (nonzero only for |l-l'|=1)
    double p_coef(int l, int lp) const;
    /// q_{alpha,l,l'}, alpha in {0:x, 1:y, 2:z}   (nonzero only for |l-l'| in {0,2})
    double q_coef(int axis, int l, int lp) const;

private:
    CouplingTables(int max_l, int m);
    std::size_t idx3(int a, int b, int c) const {
        const std::size_t n = max_l_ + 1;
        return (static_cast<std::size_t>(a) * n + b) * n + c;
    }
    int max_l_, m_;
    std::vector<double> W1_, W2_, N_, p_, qz_, qx_;
    std::vector<std::vector<C5Entry>> c5_lists_;
};

/// i^n for integer n (exact, no trig roundoff).
inline cplx ipow(int n) {
    switch (((n % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

} // namespace floq

#endif

#include "floq/specfun.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace floq {

namespace {

// Ascending power series, j_l(z) = z^l/(2l+1)!! sum_k (-z^2/2)^k / (k! (2l+3)...(2l+2k+1)).
cplx bessel_j_series(int l, cplx z) {
    cplx zl = 1.0;
    double dfact = 1.0;
    for (int i = 0; i < l; ++i) {
        zl *= z;
        dfact *= 2 * i + 3;
    }
    const cplx x = -0.5 * z * z;
    cplx term = 1.0, sum = 1.0;
    for (int k = 1; k < 400; ++k) {
        term *= x / (static_cast<double>(k) * (2.0 * l + 2.0 * k + 1.0));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return zl / dfact * sum;
}

} // namespace

cplx sph_bessel_j(int l, cplx z) {
    if (l < 0) throw std::invalid_argument("sph_bessel_j: l < 0");
    if (std::abs(z.imag()) > 690.0)
        throw std::range_error("sph_bessel_j: |Im z| too large, e^{|Im z|} overflows");
    const double az = std::abs(z);
    if (az == 0.0) return l == 0 ? cplx(1.0) : cplx(0.0);
    // Upward recurrence cancels below the turning point |z| ~ l.
    if (az < l + 1.0) return bessel_j_series(l, z);
    const cplx j0 = std::sin(z) / z;
    if (l == 0) return j0;
    const cplx j1 = j0 / z - std::cos(z) / z;
    if (l == 1) return j1;
    cplx fm = j0, f = j1;
    for (int n = 1; n < l; ++n) {
        cplx fp = (2.0 * n + 1.0) / z * f - fm;
        fm = f;
        f = fp;
    }
    return f;
}

cplx sph_hankel(int kind, int l, cplx z) {
    if (kind != 1 && kind != 2) throw std::invalid_argument("sph_hankel: kind must be 1 or 2");
    if (l < 0) throw std::invalid_argument("sph_hankel: l < 0");
    if (z == 0.0) throw std::domain_error("sph_hankel: singular at z = 0");
    // h_l^{(1)}(z) = (-i)^{l+1} e^{iz}/z sum_{s<=l} (l+s)!/(s!(l-s)!) (i/2z)^s,
    // and the mirrored expression for kind 2.
    const cplx sgn = (kind == 1) ? cplx(0, 1) : cplx(0, -1);
    const cplx pre = (kind == 1 ? ipow(-(l + 1)) : ipow(l + 1)) * std::exp(sgn * z) / z;
    const cplx x = sgn / (2.0 * z);
    cplx term = 1.0, sum = 1.0;
    for (int s = 1; s <= l; ++s) {
        term *= x * static_cast<double>((l + s) * (l - s + 1)) / static_cast<double>(s);
        sum += term;
    }
    return pre * sum;
}

cplx sph_bessel_j_deriv(int l, cplx z) {
    if (std::abs(z) == 0.0) {
        if (l == 1) return cplx(1.0 / 3.0);
        return cplx(0.0);
    }
    // d/dz f_l = -f_{l+1} + (l/z) f_l
    return -sph_bessel_j(l + 1, z) + (static_cast<double>(l) / z) * sph_bessel_j(l, z);
}

cplx sph_hankel_deriv(int kind, int l, cplx z) {
    return -sph_hankel(kind, l + 1, z) + (static_cast<double>(l) / z) * sph_hankel(kind, l, z);
}

double legendre_p(int l, int m, double x) {
    if (m < 0 || m > l) throw std::invalid_argument("legendre_p: require 0 <= m <= l");
    if (std::abs(x) > 1.0) throw std::domain_error("legendre_p: |x| > 1");
    // P_m^m with the Condon-Shortley phase, then upward in l.
    double pmm = 1.0;
    if (m > 0) {
        const double somx2 = std::sqrt((1.0 - x) * (1.0 + x));
        double fact = 1.0;
        for (int i = 1; i <= m; ++i) {
            pmm *= -fact * somx2;
            fact += 2.0;
        }
    }
    if (l == m) return pmm;
    double pmmp1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) return pmmp1;
    double pll = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = (x * (2.0 * ll - 1.0) * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    return pll;
}

double spherical_norm_N(int l, int m) {
    if (m < 0 || m > l) throw std::invalid_argument("spherical_norm_N: require 0 <= m <= l");
    double ratio = 1.0; // (l-m)!/(l+m)!
    for (int i = l - m + 1; i <= l + m; ++i) ratio /= i;
    const double v = std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI)) * std::sqrt(ratio);
    return (m % 2 == 0) ? v : -v;
}

const std::pair<std::vector<double>, std::vector<double>>& GaussLegendre::rule(int n) {
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<double> x(n), w(n);
    const int mhalf = (n + 1) / 2;
    for (int i = 0; i < mhalf; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

double triple_overlap_W(int l1, int m1, int l2, int m2, int l3, int m3, int nodes) {
    if (l1 < 0 || l2 < 0 || l3 < 0 || m1 > l1 || m2 > l2 || m3 > l3 || m1 < 0 || m2 < 0 || m3 < 0)
        throw std::invalid_argument("triple_overlap_W: bad indices");
    // Exact selection rules: integrand parity (-1)^{l1+m1+l2+m2+l3+m3}, and the
    // triangle rule for a same-m triple.
    if ((l1 + m1 + l2 + m2 + l3 + m3) % 2 != 0) return 0.0;
    if (m1 == m2 && m2 == m3 && (l3 > l1 + l2 || l2 > l1 + l3 || l1 > l2 + l3)) return 0.0;
    const bool poly = ((m1 + m2 + m3) % 2 == 0);
    int n = nodes;
    if (n == 0) n = poly ? ((l1 + l2 + l3) / 2 + 2) : 200;
    const auto& [x, w] = GaussLegendre::rule(n);
    double integral = 0.0;
    for (int i = 0; i < n; ++i)
        integral += w[i] * legendre_p(l1, m1, x[i]) * legendre_p(l2, m2, x[i]) * legendre_p(l3, m3, x[i]);
    // Bracketed prefactor inverse: (2l3+1)(l3-m3)! / (2 (l3+m3)!)
    double ratio = 1.0; // (l3-m3)!/(l3+m3)!
    for (int i = l3 - m3 + 1; i <= l3 + m3; ++i) ratio /= i;
    return integral * (2.0 * l3 + 1.0) * ratio / 2.0;
}

CouplingTables::CouplingTables(int max_l, int m) : max_l_(max_l), m_(m) {
    const int n = max_l + 1;
    W1_.assign(static_cast<std::size_t>(n) * n * n, 0.0);
    W2_.assign(static_cast<std::size_t>(n) * n * n, 0.0);
    N_.resize(n);
    for (int l = m; l <= max_l; ++l) N_[l] = spherical_norm_N(l, m);
    for (int l = 0; l < std::min(m, n); ++l) N_[l] = 0.0;

    for (int a = 0; a <= max_l; ++a)
        for (int b = 0; b <= max_l; ++b)
            for (int c = 0; c <= max_l; ++c) {
                if (c >= m) W1_[idx3(a, b, c)] = triple_overlap_W(a, 0, b, 0, c, m);
                if (a >= m && c >= m) W2_[idx3(a, b, c)] = triple_overlap_W(a, m, b, 0, c, m);
            }

    // Sparse c5 term lists keyed by (l1, l).
    c5_lists_.resize(static_cast<std::size_t>(n) * n);
    for (int l1 = 0; l1 <= max_l; ++l1)
        for (int l = 0; l <= max_l; ++l) {
            auto& list = c5_lists_[static_cast<std::size_t>(l1) * n + l];
            for (int l2 = 0; l2 <= max_l; ++l2)
                for (int l3 = m; l3 <= max_l; ++l3) {
                    if (w3(l1, l2, l3) == 0.0) continue;
                    for (int l4 = 0; l4 <= max_l; ++l4) {
                        const double w2 = wm(l3, l4, l);
                        if (w2 == 0.0) continue;
                        cplx coef = c3(l1, l2, l3) * (2.0 * l4 + 1.0) * ipow(l4) * w2 / N_[l];
                        if (std::abs(coef) == 0.0) continue;
                        list.push_back({l2, l3, l4, coef});
                    }
                }
        }

    // p and q angular moment tables (m = 0 convention, used by observables).
    p_.assign(static_cast<std::size_t>(n) * n, 0.0);
    qz_.assign(static_cast<std::size_t>(n) * n, 0.0);
    qx_.assign(static_cast<std::size_t>(n) * n, 0.0);
    const int nq = 2 * max_l + 4;
    const auto& [x, w] = GaussLegendre::rule(nq);
    for (int l = 0; l <= max_l; ++l)
        for (int lp = 0; lp <= max_l; ++lp) {
            double s1 = 0.0, s2 = 0.0, s0 = 0.0;
            for (int i = 0; i < nq; ++i) {
                const double pl = legendre_p(l, 0, x[i]) * legendre_p(lp, 0, x[i]);
                s1 += w[i] * x[i] * pl;
                s2 += w[i] * x[i] * x[i] * pl;
                s0 += w[i] * pl;
            }
            const double pre = 2.0 * M_PI * spherical_norm_N(l, 0) * spherical_norm_N(lp, 0);
            p_[static_cast<std::size_t>(l) * n + lp] = pre * s1;
            qz_[static_cast<std::size_t>(l) * n + lp] = pre * s2;
            qx_[static_cast<std::size_t>(l) * n + lp] = pre * 0.5 * (s0 - s2);
        }
}

std::shared_ptr<const CouplingTables> CouplingTables::build(int max_l, int m) {
    return std::shared_ptr<const CouplingTables>(new CouplingTables(max_l, m));
}

cplx CouplingTables::c3(int l1, int l2, int l3) const {
    if (l1 > max_l_ || l2 > max_l_ || l3 > max_l_)
        throw std::out_of_range("CouplingTables::c3: index exceeds configured max_l");
    return 2.0 * (2.0 * l2 + 1.0) * ipow(-l2) * ipow(l3 - m_) * w3(l1, l2, l3);
}

cplx CouplingTables::c5(int l1, int l2, int l3, int l4, int l) const {
    if (l1 > max_l_ || l2 > max_l_ || l3 > max_l_ || l4 > max_l_ || l > max_l_)
        throw std::out_of_range("CouplingTables::c5: index exceeds configured max_l");
    if (N_[l] == 0.0) return 0.0;
    return c3(l1, l2, l3) * (2.0 * l4 + 1.0) * ipow(l4) * wm(l3, l4, l) / N_[l];
}

const std::vector<CouplingTables::C5Entry>& CouplingTables::c5_list(int l1, int l) const {
    if (l1 > max_l_ || l > max_l_ || l1 < 0 || l < 0)
        throw std::out_of_range("CouplingTables::c5_list: index exceeds configured max_l");
    return c5_lists_[static_cast<std::size_t>(l1) * (max_l_ + 1) + l];
}

double CouplingTables::p_coef(int l, int lp) const {
    if (std::abs(l - lp) != 1) return 0.0;
    return p_[static_cast<std::size_t>(l) * (max_l_ + 1) + lp];
}

double CouplingTables::q_coef(int axis, int l, int lp) const {
    const int d = std::abs(l - lp);
    if (d != 0 && d != 2) return 0.0;
    const auto& tab = (axis == 2) ? qz_ : qx_;
    return tab[static_cast<std::size_t>(l) * (max_l_ + 1) + lp];
}

} // namespace floq

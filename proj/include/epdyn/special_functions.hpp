#pragma once

// Complex-argument special functions needed by the exact circular-path
// solution: Bessel J0, J1, Y0, Y1 (power series up to |z| = 14, Hankel
// asymptotics beyond, integer-sheet connection formulas for continued
// tracking), the modified Bessel I0 (via J0 of a rotated argument, plus
// an exponentially scaled real version for log-space work), and the
// exponential integral E1 (series / continued fraction / asymptotic).

#include <cmath>

#include "epdyn/integrate.hpp"
#include "epdyn/types.hpp"

namespace epdyn {

inline constexpr double euler_gamma = 0.57721566490153286061;

namespace sf_detail {

inline constexpr double series_asymptotic_boundary = 14.0;

using CLD = std::complex<long double>;

inline CLD to_ld(const Complex& z) { return CLD(z.real(), z.imag()); }
inline Complex to_d(const CLD& z) { return Complex(double(z.real()), double(z.imag())); }

struct JPair {
    CLD j0, j1;
};

// Power series accumulated in long double: the alternating sums cancel
// by a factor ~ e^{2 |Im z|}, so the extra mantissa bits matter for
// strongly complex arguments near the regime boundary.
inline JPair bessel_j01_series_ld(const CLD& z) {
    const CLD q = 0.25L * z * z;  // (z/2)^2
    CLD term0 = 1.0L, sum0 = 1.0L;
    CLD term1 = 1.0L, sum1 = 1.0L;
    for (int k = 1; k < 90; ++k) {
        term0 *= -q / (long double)(k * k);
        sum0 += term0;
        term1 *= -q / (long double)(k * (k + 1));
        sum1 += term1;
        if (std::abs(term0) < 1e-22L * std::abs(sum0) &&
            std::abs(term1) < 1e-22L * std::abs(sum1))
            break;
    }
    return {sum0, 0.5L * z * sum1};
}

struct YPair {
    CLD y0, y1;
};

// A&S 9.1.11 specialised to n = 0, 1; psi(k+1) built incrementally.
inline YPair bessel_y01_series_ld(const CLD& z) {
    const long double pil = 3.14159265358979323846L;
    const long double gl = 0.5772156649015328606L;
    const CLD q = 0.25L * z * z;
    const CLD lg = std::log(0.5L * z);
    const auto [j0, j1] = bessel_j01_series_ld(z);

    CLD term = 1.0L;          // (-q)^k / (k!)^2
    long double psi1 = -gl;   // psi(k+1)
    CLD sum0 = psi1 * term;
    for (int k = 1; k < 90; ++k) {
        term *= -q / (long double)(k * k);
        psi1 += 1.0L / k;
        const CLD add = psi1 * term;
        sum0 += add;
        if (std::abs(add) < 1e-22L * (std::abs(sum0) + 1.0L)) break;
    }
    const CLD y0 = (2.0L / pil) * (lg * j0 - sum0);

    term = 1.0L;  // (-q)^k / (k! (k+1)!)
    psi1 = -gl;
    long double psi2 = -gl + 1.0L;  // psi(k+2)
    CLD sum1 = (psi1 + psi2) * term;
    for (int k = 1; k < 90; ++k) {
        term *= -q / (long double)(k * (k + 1));
        psi1 += 1.0L / k;
        psi2 += 1.0L / (k + 1);
        const CLD add = (psi1 + psi2) * term;
        sum1 += add;
        if (std::abs(add) < 1e-22L * (std::abs(sum1) + 1.0L)) break;
    }
    const CLD y1 = (2.0L / pil) * lg * j1 - 2.0L / (pil * z) - (0.5L * z / pil) * sum1;
    return {y0, y1};
}

struct JPairD {
    Complex j0, j1;
};

inline JPairD bessel_j01_series(const Complex& z) {
    auto r = bessel_j01_series_ld(to_ld(z));
    return {to_d(r.j0), to_d(r.j1)};
}

struct YPairD {
    Complex y0, y1;
};

inline YPairD bessel_y01_series(const Complex& z) {
    auto r = bessel_y01_series_ld(to_ld(z));
    return {to_d(r.y0), to_d(r.y1)};
}

// Hankel asymptotic sums S(+-) = sum_k (+-i)^k a_k(n) / z^k, truncated
// at the smallest term.
inline Complex hankel_sum(const Complex& z, int n, int sig) {
    const double mu = 4.0 * n * n;
    Complex term = 1.0, sum = 1.0;
    double prev_mag = 1.0;
    const Complex iz = Complex(0.0, double(sig)) / z;
    for (int k = 1; k < 60; ++k) {
        const double num = mu - double((2 * k - 1) * (2 * k - 1));
        term *= iz * (num / (8.0 * k));
        const double mag = std::abs(term);
        if (mag > prev_mag) break;  // divergent tail
        sum += term;
        prev_mag = mag;
        if (mag < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

struct HankelPair {
    Complex h0p, h1p;  // H^(1)
    Complex h0m, h1m;  // H^(2)
};

inline HankelPair hankel_asymptotic(const Complex& z) {
    const Complex pref = std::sqrt(2.0 / (pi * z));
    const Complex w0 = z - 0.25 * pi, w1 = z - 0.75 * pi;
    HankelPair h;
    h.h0p = pref * std::exp(I * w0) * hankel_sum(z, 0, +1);
    h.h1p = pref * std::exp(I * w1) * hankel_sum(z, 1, +1);
    h.h0m = pref * std::exp(-I * w0) * hankel_sum(z, 0, -1);
    h.h1m = pref * std::exp(-I * w1) * hankel_sum(z, 1, -1);
    return h;
}

}  // namespace sf_detail

// J and Y of orders 0 and 1 at a principal-domain argument.
struct Bessel01 {
    Complex j0, j1, y0, y1;
};

inline Bessel01 bessel01(const Complex& z) {
    if (z == Complex(0.0)) throw SpecialFunctionDomain("bessel01: z = 0");
    if (std::abs(z) > 1e8)
        throw SpecialFunctionDomain("bessel01: |z| too large for double precision phases");
    Bessel01 b;
    if (std::abs(z) <= sf_detail::series_asymptotic_boundary) {
        auto [j0, j1] = sf_detail::bessel_j01_series(z);
        auto [y0, y1] = sf_detail::bessel_y01_series(z);
        b.j0 = j0;
        b.j1 = j1;
        b.y0 = y0;
        b.y1 = y1;
        return b;
    }
    if (z.real() < 0.0) {
        // the Hankel forms lose the subdominant part near arg = +-pi;
        // evaluate in the right half plane and connect exactly
        const int m = z.imag() >= 0.0 ? 1 : -1;
        const Complex zr = -z;  // z e^{-i m pi}
        auto br = bessel01(zr);
        Bessel01 r;
        const Complex two_im = Complex(0.0, 2.0 * m);
        r.j0 = br.j0;
        r.j1 = -br.j1;
        r.y0 = br.y0 + two_im * br.j0;
        r.y1 = -(br.y1 + two_im * br.j1);
        return r;
    }
    auto h = sf_detail::hankel_asymptotic(z);
    b.j0 = 0.5 * (h.h0p + h.h0m);
    b.j1 = 0.5 * (h.h1p + h.h1m);
    b.y0 = (h.h0p - h.h0m) / (2.0 * I);
    b.y1 = (h.h1p - h.h1m) / (2.0 * I);
    return b;
}

// Continuation onto sheet m: values of J_n, Y_n at z e^{i m pi} given
// the principal-domain z.  J_n(z e^{im pi}) = (-1)^{mn} J_n(z),
// Y_n(z e^{im pi}) = (-1)^{mn} [Y_n(z) + 2 i m J_n(z)].
inline Bessel01 bessel01_on_sheet(const Complex& z_principal, int m) {
    Bessel01 b = bessel01(z_principal);
    if (m == 0) return b;
    Bessel01 r;
    const double s0 = 1.0;                       // (-1)^{m*0}
    const double s1 = (m % 2 == 0) ? 1.0 : -1.0;  // (-1)^{m*1}
    const Complex two_im = Complex(0.0, 2.0 * m);
    r.j0 = s0 * b.j0;
    r.j1 = s1 * b.j1;
    r.y0 = s0 * (b.y0 + two_im * b.j0);
    r.y1 = s1 * (b.y1 + two_im * b.j1);
    return r;
}

// Numerically stable J0 Y1 - J1 Y0 (equals -2/(pi z)).  The naive
// product cancels by ~ e^{2|Im z|}; in the series regime long-double
// accumulation carries the cancellation, beyond it the product is
// assembled from opposite-exponential Hankel cross terms.
inline Complex bessel_cross_product(const Complex& z) {
    if (std::abs(z) <= sf_detail::series_asymptotic_boundary) {
        const auto zl = sf_detail::to_ld(z);
        auto [j0, j1] = sf_detail::bessel_j01_series_ld(zl);
        auto [y0, y1] = sf_detail::bessel_y01_series_ld(zl);
        return sf_detail::to_d(j0 * y1 - j1 * y0);
    }
    if (z.real() < 0.0) return -bessel_cross_product(-z);  // W(-z) = -W(z)
    auto h = sf_detail::hankel_asymptotic(z);
    if (std::abs(z.imag()) <= 2.5) {
        const Complex j0 = 0.5 * (h.h0p + h.h0m), j1 = 0.5 * (h.h1p + h.h1m);
        const Complex y0 = (h.h0p - h.h0m) / (2.0 * I), y1 = (h.h1p - h.h1m) / (2.0 * I);
        return j0 * y1 - j1 * y0;
    }
    return (h.h0m * h.h1p - h.h0p * h.h1m) / (2.0 * I);
}

// Modified Bessel I0.  I0(z) = J0(i z); the argument is reflected into
// Re z >= 0 first (I0 is even).
inline Complex bessel_i0(Complex z) {
    if (z == Complex(0.0)) return Complex(1.0);
    if (z.real() < 0.0) z = -z;
    if (std::abs(z) > 700.0)
        throw OverflowError("bessel_i0: overflow, use bessel_i0e_scaled");
    return bessel01(I * z).j0;
}

// e^{-x} I0(x) for real x >= 0 (no overflow at any x).
inline double bessel_i0e_scaled(double x) {
    if (x < 0) x = -x;
    if (x <= 15.0) return std::exp(-x) * bessel_i0(Complex(x)).real();
    double term = 1.0, sum = 1.0, prev = 1.0;
    for (int k = 1; k < 40; ++k) {
        const double num = double((2 * k - 1) * (2 * k - 1));
        term *= num / (8.0 * k * x);
        if (term > prev) break;
        sum += term;
        prev = term;
        if (term < 1e-17 * sum) break;
    }
    return sum / std::sqrt(2.0 * pi * x);
}

// log I0(x) for real x >= 0, safe for large arguments.
inline double log_bessel_i0(double x) {
    if (x < 0) x = -x;
    return x + std::log(bessel_i0e_scaled(x));
}

// ---------------------------------------------------------------------------
// Exponential integral E1 of complex argument (principal branch).

namespace sf_detail {

inline Complex e1_series(const Complex& z) {
    // -gamma - log z + sum (-1)^{k+1} z^k / (k k!), long double carry
    std::complex<long double> zl(z.real(), z.imag());
    std::complex<long double> term(1.0L), sum(0.0L);
    for (int k = 1; k < 120; ++k) {
        term *= -zl / (long double)(k);
        const std::complex<long double> add = -term / (long double)(k);
        sum += add;
        if (std::abs(add) < 1e-20L * (std::abs(sum) + 1e-30L)) break;
    }
    const std::complex<long double> r =
        -(long double)euler_gamma - std::log(zl) + sum;
    return Complex(double(r.real()), double(r.imag()));
}

inline Complex e1_continued_fraction(const Complex& z) {
    // E1(z) = e^{-z} / (z + 1 - 1/(z + 3 - 4/(z + 5 - 9/(...))))
    // evaluated with the modified Lentz scheme.
    const double tiny = 1e-280;
    Complex f = z + 1.0;
    if (f == Complex(0.0)) f = tiny;
    Complex C = f, D = 0.0, b = 0.0;
    for (int k = 1; k < 300; ++k) {
        const Complex a = -double(k) * double(k);
        b = z + double(2 * k + 1);
        D = b + a * D;
        if (D == Complex(0.0)) D = tiny;
        C = b + a / C;
        if (C == Complex(0.0)) C = tiny;
        D = 1.0 / D;
        const Complex delta = C * D;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-z) / f;
}

// E1(z) = e^{-z} int_0^inf e^{-t}/(t+z) dt, valid off the cut; the
// tail beyond t = 75 is below 3e-33.
inline Complex e1_integral(const Complex& z) {
    const Complex q = integrate_gk([&](double t) { return std::exp(-t) / (t + z); }, 0.0,
                                   75.0, 1e-16);
    return std::exp(-z) * q;
}

}  // namespace sf_detail

inline Complex expint_e1(const Complex& z) {
    if (z == Complex(0.0)) throw SpecialFunctionDomain("expint_e1: z = 0");
    const double az = std::abs(z);
    const double aarg = std::abs(std::arg(z));
    if (az <= 8.0) return sf_detail::e1_series(z);
    if (aarg <= 0.40 * pi) return sf_detail::e1_continued_fraction(z);
    // the series (long double) carries the e^{|Re z|} cancellation up
    // to |z| = 14; past that, where the continued fraction converges
    // too slowly, use the Laplace integral representation
    if (az <= 14.0) return sf_detail::e1_series(z);
    return sf_detail::e1_integral(z);
}

}  // namespace epdyn

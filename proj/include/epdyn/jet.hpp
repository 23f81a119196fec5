#pragma once

// Truncated Taylor arithmetic.  A Jet<S, N> holds the coefficients
// c_k = f^(k)(t0)/k! of a function about a base point, so products are
// Cauchy convolutions and elementary functions follow the usual
// recurrences.  Works over real or complex scalars and for complex base
// points, which is what the analytic-continuation routines rely on.

#include <array>
#include <cstddef>

#include "epdyn/types.hpp"

namespace epdyn {

template <class S, int N>
struct Jet {
    static_assert(N >= 0);
    std::array<S, N + 1> c{};

    Jet() = default;
    explicit Jet(const S& value) { c[0] = value; }

    static Jet variable(const S& t0) {
        Jet j;
        j.c[0] = t0;
        if constexpr (N >= 1) j.c[1] = S(1);
        return j;
    }

    const S& value() const { return c[0]; }

    // k-th derivative (not the raw coefficient)
    S derivative(int k) const {
        S f = c[k];
        for (int i = 2; i <= k; ++i) f *= S(double(i));
        return f;
    }

    Jet operator-() const {
        Jet r;
        for (int k = 0; k <= N; ++k) r.c[k] = -c[k];
        return r;
    }
    Jet operator+(const Jet& o) const {
        Jet r;
        for (int k = 0; k <= N; ++k) r.c[k] = c[k] + o.c[k];
        return r;
    }
    Jet operator-(const Jet& o) const {
        Jet r;
        for (int k = 0; k <= N; ++k) r.c[k] = c[k] - o.c[k];
        return r;
    }
    Jet operator*(const Jet& o) const {
        Jet r;
        for (int k = 0; k <= N; ++k) {
            S s{};
            for (int j = 0; j <= k; ++j) s += c[j] * o.c[k - j];
            r.c[k] = s;
        }
        return r;
    }
    Jet operator*(const S& s) const {
        Jet r;
        for (int k = 0; k <= N; ++k) r.c[k] = c[k] * s;
        return r;
    }
    Jet operator+(const S& s) const {
        Jet r = *this;
        r.c[0] += s;
        return r;
    }
    Jet operator-(const S& s) const {
        Jet r = *this;
        r.c[0] -= s;
        return r;
    }
};

template <class S, int N>
Jet<S, N> operator*(const S& s, const Jet<S, N>& j) {
    return j * s;
}

template <class S, int N>
Jet<S, N> reciprocal(const Jet<S, N>& u) {
    Jet<S, N> v;
    v.c[0] = S(1) / u.c[0];
    for (int k = 1; k <= N; ++k) {
        S s{};
        for (int j = 1; j <= k; ++j) s += u.c[j] * v.c[k - j];
        v.c[k] = -v.c[0] * s;
    }
    return v;
}

template <class S, int N>
Jet<S, N> operator/(const Jet<S, N>& a, const Jet<S, N>& b) {
    return a * reciprocal(b);
}

// Square root with the zeroth-order branch supplied by the caller.
// root0 must satisfy root0^2 == u.value(); the eigenvalue tracker picks
// the branch-continuous sign before calling.
template <class S, int N>
Jet<S, N> sqrt_with_branch(const Jet<S, N>& u, const S& root0) {
    Jet<S, N> w;
    w.c[0] = root0;
    const S two = S(2);
    for (int k = 1; k <= N; ++k) {
        S s{};
        for (int j = 1; j < k; ++j) s += w.c[j] * w.c[k - j];
        w.c[k] = (u.c[k] - s) / (two * w.c[0]);
    }
    return w;
}

template <class S, int N>
void sincos_jet(const Jet<S, N>& u, Jet<S, N>& s, Jet<S, N>& c) {
    using std::cos;
    using std::sin;
    s.c[0] = sin(u.c[0]);
    c.c[0] = cos(u.c[0]);
    for (int k = 1; k <= N; ++k) {
        S as{}, ac{};
        for (int j = 1; j <= k; ++j) {
            as += S(double(j)) * u.c[j] * c.c[k - j];
            ac += S(double(j)) * u.c[j] * s.c[k - j];
        }
        s.c[k] = as / S(double(k));
        c.c[k] = -ac / S(double(k));
    }
}

template <class S, int N>
Jet<S, N> sin_jet(const Jet<S, N>& u) {
    Jet<S, N> s, c;
    sincos_jet(u, s, c);
    return s;
}

template <class S, int N>
Jet<S, N> cos_jet(const Jet<S, N>& u) {
    Jet<S, N> s, c;
    sincos_jet(u, s, c);
    return c;
}

template <class S, int N>
Jet<S, N> exp_jet(const Jet<S, N>& u) {
    using std::exp;
    Jet<S, N> e;
    e.c[0] = exp(u.c[0]);
    for (int k = 1; k <= N; ++k) {
        S a{};
        for (int j = 1; j <= k; ++j) a += S(double(j)) * u.c[j] * e.c[k - j];
        e.c[k] = a / S(double(k));
    }
    return e;
}

// d/dt as a jet one degree shorter, padded with zero at the top.
template <class S, int N>
Jet<S, N> derivative_jet(const Jet<S, N>& u) {
    Jet<S, N> d;
    for (int k = 0; k < N; ++k) d.c[k] = S(double(k + 1)) * u.c[k + 1];
    d.c[N] = S{};
    return d;
}

// Promote a real jet to a complex one (real base point paths).
template <int N>
Jet<Complex, N> to_complex(const Jet<double, N>& u) {
    Jet<Complex, N> r;
    for (int k = 0; k <= N; ++k) r.c[k] = Complex(u.c[k], 0.0);
    return r;
}

}  // namespace epdyn

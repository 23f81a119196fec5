#pragma once

// The three local models of the eigenvalue trajectory used for
// closed-form transition estimates: a circular lambda(t) (EP orbit at
// constant speed), a linear sweep, and an elliptical interpolation
// between the two.  Each supplies lambda and the coupling f as jets at
// real or complex time; there is no square root involved, so no branch
// bookkeeping.

#include <string>

#include "epdyn/jet.hpp"
#include "epdyn/types.hpp"

namespace epdyn {

enum class PrototypeKind { Circular, Linear, Elliptical };

inline std::string to_string(PrototypeKind k) {
    switch (k) {
        case PrototypeKind::Circular: return "circular";
        case PrototypeKind::Linear: return "linear";
        case PrototypeKind::Elliptical: return "elliptical";
    }
    return "?";
}

struct LambdaPrototype {
    PrototypeKind kind = PrototypeKind::Circular;
    // circular
    double r = 0.1;
    double gamma = 1.0;
    // shared
    double T = 100.0;
    // linear / elliptical
    double lambda_re = 0.0;      // Re lambda at the crossing
    double lambda_im_dot = 0.0;  // d Im lambda / dt at the crossing, > 0
    Complex f_star = 0.0;        // frozen coupling

    // circular: lambda(t) = i sqrt(r gamma) e^{-i pi t / T}
    // linear:   lambda(t) = lambda_re + i lambda_im_dot t
    // elliptical: lambda(t) = lambda_re cos(pi t/T) + i (T lambda_im_dot/pi) sin(pi t/T)
    template <class S, int N>
    Jet<Complex, N> lambda_jet(const S& t) const {
        Jet<Complex, N> tj = Jet<Complex, N>::variable(Complex(t));
        switch (kind) {
            case PrototypeKind::Circular: {
                const double s = std::sqrt(r * gamma);
                return exp_jet(tj * Complex(0.0, -pi / T)) * (I * Complex(s));
            }
            case PrototypeKind::Linear:
                return tj * Complex(0.0, lambda_im_dot) + Complex(lambda_re);
            case PrototypeKind::Elliptical: {
                Jet<Complex, N> sj, cj;
                sincos_jet(tj * Complex(pi / T), sj, cj);
                return cj * Complex(lambda_re) + sj * Complex(0.0, T * lambda_im_dot / pi);
            }
        }
        return {};
    }

    template <class S, int N>
    Jet<Complex, N> f_jet(const S&) const {
        if (kind == PrototypeKind::Circular) return Jet<Complex, N>(Complex(0.0, 0.5 * pi / T));
        return Jet<Complex, N>(f_star);
    }

    double epsilon() const {
        if (kind == PrototypeKind::Circular) return pi / (4.0 * std::sqrt(r * gamma) * T);
        // |f / (2 lambda)| at the crossing is 0 there; report the sweep value
        return std::abs(f_star) / (2.0 * std::abs(lambda_re) + 1e-300);
    }

    // A representative critical time with d Im lambda/dt > 0.
    double default_t_star() const {
        switch (kind) {
            case PrototypeKind::Circular: return 1.5 * T;
            case PrototypeKind::Linear: return 0.0;
            case PrototypeKind::Elliptical: return 0.0;
        }
        return 0.0;
    }

    // Time span over which Im lambda repeats (linear never does).
    double period_hint() const {
        return kind == PrototypeKind::Linear ? std::numeric_limits<double>::infinity() : 2.0 * T;
    }
};

}  // namespace epdyn

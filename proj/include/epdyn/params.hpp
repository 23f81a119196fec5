#pragma once

#include <span>
#include <vector>

#include "epdyn/types.hpp"

namespace epdyn {

// Bare-mode parameters of the coupled pair: two frequencies, two decay
// rates and the coupling, all in units of the reference rate.
struct RawParams {
    double omega1 = 0, omega2 = 0;
    double gamma1 = 0, gamma2 = 0;
    double g = 0;
};

// Co-rotating frame parameters.  omega and gamma are the half
// differences that drive the nontrivial dynamics; Omega and Gamma are
// the averages removed by the global frame factor.
struct ReducedParams {
    double omega = 0;   // (omega2 - omega1) / 2
    double gamma = 0;   // (gamma1 - gamma2) / 2
    double g = 0;
    double Omega = 0;   // (omega2 + omega1) / 2
    double Gamma = 0;   // (gamma2 + gamma1) / 2
};

inline ReducedParams reduce(const RawParams& raw) {
    if (!(finite(raw.omega1) && finite(raw.omega2) && finite(raw.gamma1) &&
          finite(raw.gamma2) && finite(raw.g)))
        throw InvalidConfig("reduce: non-finite raw parameters");
    ReducedParams p;
    p.omega = 0.5 * (raw.omega2 - raw.omega1);
    p.gamma = 0.5 * (raw.gamma1 - raw.gamma2);
    p.g = raw.g;
    p.Omega = 0.5 * (raw.omega2 + raw.omega1);
    p.Gamma = 0.5 * (raw.gamma2 + raw.gamma1);
    return p;
}

// Exceptional points of the reduced two-mode matrix at fixed gamma:
// omega + i gamma/2 -+ i g = 0, i.e. (omega, g) = (0, +-gamma/2).
inline std::vector<std::pair<double, double>> ep_locations(double gamma) {
    if (gamma == 0.0) return {{0.0, 0.0}};
    return {{0.0, 0.5 * gamma}, {0.0, -0.5 * gamma}};
}

struct GlobalFactorResult {
    std::vector<Complex> alpha;
    bool overflow = false;  // set when |Re exponent| exceeds 700 anywhere
};

// Re-attach the global frame factor: alpha(t) = exp(-i int_0^t [Omega -
// i Gamma/2]) beta(t).  Omega and Gamma are sampled on the same grid as
// beta; the running integral uses composite Simpson on each grid cell
// (matching the propagator's output-grid accuracy).
inline GlobalFactorResult restore_global_factor(std::span<const Complex> beta,
                                                std::span<const double> t,
                                                std::span<const double> Omega,
                                                std::span<const double> Gamma) {
    if (beta.size() != t.size() || Omega.size() != t.size() || Gamma.size() != t.size())
        throw InvalidConfig("restore_global_factor: grid size mismatch");
    GlobalFactorResult out;
    out.alpha.resize(beta.size());
    Complex accum = 0.0;  // int_0^t (Omega - i Gamma/2) dt'
    for (size_t k = 0; k < t.size(); ++k) {
        if (k > 0) {
            const double h = t[k] - t[k - 1];
            const Complex fa = Complex(Omega[k - 1], -0.5 * Gamma[k - 1]);
            const Complex fb = Complex(Omega[k], -0.5 * Gamma[k]);
            accum += 0.5 * h * (fa + fb);
        }
        const Complex expo = -I * accum;
        if (std::abs(expo.real()) > 700.0) out.overflow = true;
        out.alpha[k] = std::exp(expo) * beta[k];
    }
    return out;
}

// Variant taking callables for Omega(t), Gamma(t); integrates each cell
// with 5-point Gauss-Legendre so analytic profiles keep full accuracy.
template <class FOmega, class FGamma>
GlobalFactorResult restore_global_factor(std::span<const Complex> beta,
                                         std::span<const double> t, FOmega&& Om, FGamma&& Ga) {
    static const double xg[] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                0.5384693101056831, 0.9061798459386640};
    static const double wg[] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                0.4786286704993665, 0.2369268850561891};
    GlobalFactorResult out;
    out.alpha.resize(beta.size());
    Complex accum = 0.0;
    for (size_t k = 0; k < t.size(); ++k) {
        if (k > 0) {
            const double a = t[k - 1], b = t[k];
            Complex cell = 0.0;
            for (int q = 0; q < 5; ++q) {
                const double x = 0.5 * (a + b) + 0.5 * (b - a) * xg[q];
                cell += wg[q] * Complex(Om(x), -0.5 * Ga(x));
            }
            accum += 0.5 * (b - a) * cell;
        }
        const Complex expo = -I * accum;
        if (std::abs(expo.real()) > 700.0) out.overflow = true;
        out.alpha[k] = std::exp(expo) * beta[k];
    }
    return out;
}

}  // namespace epdyn

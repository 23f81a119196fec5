#pragma once

// Instantaneous eigenframe of the reduced two-mode matrix
//   M = [[-a, g], [g, a]],  a = omega + i gamma / 2,
// with eigenvalues -+lambda, lambda^2 = a^2 + g^2, mixing angle
// tan(theta) = -g / a, eigenvectors (cos theta/2, sin theta/2) and
// (-sin theta/2, cos theta/2), and coupling f = (g adot - a gdot)
// / (2 i lambda^2) = thetadot / (2i).
//
// lambda and theta are multivalued; the square-root branch at t = 0 is
// principal and thereafter both are continued along the traversal,
// which is what produces the eigenvector swap after one EP encircling.

#include <cmath>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "epdyn/jet.hpp"
#include "epdyn/path.hpp"
#include "epdyn/prototypes.hpp"
#include "epdyn/types.hpp"

namespace epdyn {

struct SpectralFrame {
    Complex lambda;   // lambda_minus = -lambda, lambda_plus = +lambda
    Complex theta;    // complex mixing angle, tracked continuously
    Vec2 r_minus, r_plus;
    Complex f;        // non-adiabatic coupling
    double epsilon;   // |f / (2 lambda)|
};

inline Complex matrix_a(const ReducedParams& p) { return Complex(p.omega, 0.5 * p.gamma); }

inline Complex lambda_sq_of(const ReducedParams& p) {
    const Complex a = matrix_a(p);
    return a * a + p.g * p.g;
}

// Branch-continuous square root: principal unless the previous value
// says otherwise (|l - prev| < |l + prev| picks the same sheet).
inline Complex continue_sqrt(const Complex& w, const std::optional<Complex>& prev) {
    Complex l = std::sqrt(w);
    if (prev && std::abs(l - *prev) > std::abs(l + *prev)) l = -l;
    return l;
}

inline Complex coupling_f(const ReducedParams& p, const ReducedParams& pdot,
                          const Complex& lambda_sq) {
    const Complex a = matrix_a(p);
    const Complex adot = Complex(pdot.omega, 0.5 * pdot.gamma);
    return (p.g * adot - a * pdot.g) / (2.0 * I * lambda_sq);
}

inline void check_not_ep(const ReducedParams& p, const Complex& lambda_sq) {
    const double scale = p.omega * p.omega + 0.25 * p.gamma * p.gamma + p.g * p.g;
    if (std::abs(lambda_sq) < 1e-24 * scale)
        throw AtExceptionalPoint("spectral_frame: parameters within EP cutoff");
}

inline SpectralFrame spectral_frame(const ReducedParams& p, const ReducedParams& pdot,
                                    const std::optional<SpectralFrame>& prev = std::nullopt) {
    const Complex lsq = lambda_sq_of(p);
    check_not_ep(p, lsq);
    std::optional<Complex> lp;
    if (prev) lp = prev->lambda;
    const Complex lambda = continue_sqrt(lsq, lp);

    // e^{i theta} = (a - i g) / lambda; unwrap Re theta against prev
    const Complex a = matrix_a(p);
    const Complex w = (a - I * Complex(p.g)) / lambda;
    Complex theta = Complex(std::arg(w), -std::log(std::abs(w)));
    if (prev) {
        const double k = std::round((prev->theta.real() - theta.real()) / (2.0 * pi));
        theta += Complex(2.0 * pi * k, 0.0);
    }

    SpectralFrame fr;
    fr.lambda = lambda;
    fr.theta = theta;
    const Complex ch = std::cos(0.5 * theta), sh = std::sin(0.5 * theta);
    fr.r_minus = {ch, sh};
    fr.r_plus = {-sh, ch};
    fr.f = coupling_f(p, pdot, lsq);
    fr.epsilon = std::abs(fr.f / (2.0 * lambda));
    return fr;
}

// Left eigenvectors for the complex-symmetric M: plain transposes of
// the right ones, biorthonormal without conjugation.
inline Vec2 left_minus(const SpectralFrame& fr) { return fr.r_minus; }
inline Vec2 left_plus(const SpectralFrame& fr) { return fr.r_plus; }

// ---------------------------------------------------------------------------
// Unified source of (lambda, f) for the dynamical routines: either a
// parameter path (square root tracked by the caller-held hint) or a
// lambda prototype (closed form, single valued).

class DynamicsSource {
  public:
    explicit DynamicsSource(PathInstance path) : v_(std::move(path)) {}
    explicit DynamicsSource(LambdaPrototype proto) : v_(std::move(proto)) {}

    bool is_path() const { return std::holds_alternative<PathInstance>(v_); }
    const PathInstance& path() const { return std::get<PathInstance>(v_); }
    const LambdaPrototype& prototype() const { return std::get<LambdaPrototype>(v_); }

    double period_hint() const {
        if (is_path()) return path().period();
        return prototype().period_hint();
    }

    bool supports_complex_time() const {
        return is_path() ? path().supports_complex_time() : true;
    }

    struct LambdaF {
        Complex lambda, f;
    };

    // Point evaluation with branch continuation from `hint`.
    LambdaF eval(double t, const std::optional<Complex>& hint = std::nullopt) const {
        if (!is_path()) {
            const auto& pr = prototype();
            return {pr.lambda_jet<double, 0>(t).value(), pr.f_jet<double, 0>(t).value()};
        }
        auto pj = path().eval<double, 1>(t);
        const Complex a = Complex(pj.omega.value(), 0.5 * pj.gamma.value());
        const Complex lsq = a * a + pj.g.value() * pj.g.value();
        ReducedParams p{pj.omega.value(), pj.gamma.value(), pj.g.value(), 0, 0};
        check_not_ep(p, lsq);
        const Complex lambda = continue_sqrt(lsq, hint);
        const Complex adot = Complex(pj.omega.derivative(1), 0.5 * pj.gamma.derivative(1));
        const Complex f = (pj.g.value() * adot - a * pj.g.derivative(1)) / (2.0 * I * lsq);
        return {lambda, f};
    }

    // Jets about a real or complex base point.  For paths the branch of
    // lambda is fixed by `hint` (nearest sheet); prototypes ignore it.
    template <class S, int N>
    struct FrameJets {
        Jet<Complex, N> lambda, f;
    };

    template <class S, int N>
    FrameJets<S, N> jets(const S& t, const std::optional<Complex>& hint = std::nullopt) const {
        FrameJets<S, N> out;
        if (!is_path()) {
            out.lambda = prototype().lambda_jet<S, N>(t);
            out.f = prototype().f_jet<S, N>(t);
            return out;
        }
        auto pj = path().eval<S, N + 1>(t);
        Jet<Complex, N + 1> omega, gamma, g;
        if constexpr (std::is_same_v<S, double>) {
            omega = to_complex(pj.omega);
            gamma = to_complex(pj.gamma);
            g = to_complex(pj.g);
        } else {
            omega = pj.omega;
            gamma = pj.gamma;
            g = pj.g;
        }
        const Jet<Complex, N + 1> a = omega + gamma * Complex(0.0, 0.5);
        const Jet<Complex, N + 1> lsq_full = a * a + g * g;
        const Jet<Complex, N + 1> f_full =
            (g * derivative_jet(a) - a * derivative_jet(g)) * reciprocal(lsq_full * (2.0 * I));
        Jet<Complex, N> lsq, f;
        for (int k = 0; k <= N; ++k) {
            lsq.c[size_t(k)] = lsq_full.c[size_t(k)];
            f.c[size_t(k)] = f_full.c[size_t(k)];
        }
        const Complex root0 = continue_sqrt(lsq.value(), hint);
        out.lambda = sqrt_with_branch(lsq, root0);
        out.f = f;
        return out;
    }

  private:
    std::variant<PathInstance, LambdaPrototype> v_;
};

// ---------------------------------------------------------------------------
// Critical times: zero crossings of Im lambda along the traversal.

struct CriticalTime {
    double t_star;
    int sign;  // +1: Im lambda turns positive (adiabatic point destabilizes)
    double im_lambda_dot;
};

namespace detail {

inline double im_lambda_dot_at(const DynamicsSource& src, double t, const Complex& lambda) {
    auto j = src.jets<double, 1>(t, lambda);
    return j.lambda.derivative(1).imag();
}

}  // namespace detail

// Scan [t0, t1] with `samples_per_period` resolution, bracket sign
// changes of Im lambda and bisect to |Im lambda| < 1e-12 |lambda|.
inline std::vector<CriticalTime> critical_times(const DynamicsSource& src, double t0, double t1,
                                                int samples_per_period = 4096,
                                                const std::optional<Complex>& hint0 =
                                                    std::nullopt) {
    std::vector<CriticalTime> out;
    double per = src.period_hint();
    if (!std::isfinite(per)) per = (t1 - t0);
    const int n = std::max(16, int(std::ceil((t1 - t0) / per * samples_per_period)));
    const double dt = (t1 - t0) / n;

    std::optional<Complex> hint = hint0;
    Complex lam_prev = 0.0;
    double im_prev = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = t0 + i * dt;
        auto lf = src.eval(t, hint);
        hint = lf.lambda;
        const double im = lf.lambda.imag();
        if (i > 0 && im_prev != 0.0 && ((im_prev < 0 && im > 0) || (im_prev > 0 && im < 0))) {
            // bisect with local branch continuity from the left edge
            double a = t - dt, b = t;
            Complex la = lam_prev;
            double fa = im_prev;
            for (int iter = 0; iter < 200; ++iter) {
                const double m = 0.5 * (a + b);
                auto lm = src.eval(m, la);
                if ((fa < 0) == (lm.lambda.imag() < 0)) {
                    a = m;
                    la = lm.lambda;
                    fa = lm.lambda.imag();
                } else {
                    b = m;
                }
                const double scale = std::abs(lm.lambda);
                if (std::abs(lm.lambda.imag()) < 1e-12 * scale || (b - a) < 1e-15 * (t1 - t0))
                    break;
            }
            const double ts = 0.5 * (a + b);
            auto lf_star = src.eval(ts, la);
            const double slope = detail::im_lambda_dot_at(src, ts, lf_star.lambda);
            if (std::abs(slope) < 1e-9)
                throw TangentCrossing("critical_times: |Im lambda_dot| < 1e-9 at t = " +
                                      std::to_string(ts));
            out.push_back({ts, slope > 0 ? +1 : -1, slope});
        }
        lam_prev = lf.lambda;
        im_prev = im;
    }
    return out;
}

// Branch-continuous lambda sampled on a grid (test helper and CSV columns).
struct FrameGrid {
    std::vector<double> t;
    std::vector<Complex> lambda;
    std::vector<Complex> f;
    std::vector<double> epsilon;
};

// Continuous branch of lambda carried from (t_from, lambda_from) to
// t_to by walking in small steps.
inline Complex walk_lambda(const DynamicsSource& src, double t_from, const Complex& lambda_from,
                           double t_to, int steps = 1024) {
    Complex h = lambda_from;
    for (int k = 1; k <= steps; ++k) h = src.eval(t_from + (t_to - t_from) * k / steps, h).lambda;
    return h;
}

inline FrameGrid frames_on_grid(const DynamicsSource& src, double t0, double t1, int n) {
    FrameGrid g;
    g.t.resize(size_t(n) + 1);
    g.lambda.resize(size_t(n) + 1);
    g.f.resize(size_t(n) + 1);
    g.epsilon.resize(size_t(n) + 1);
    std::optional<Complex> hint;
    for (int i = 0; i <= n; ++i) {
        const double t = t0 + (t1 - t0) * i / n;
        auto lf = src.eval(t, hint);
        hint = lf.lambda;
        g.t[size_t(i)] = t;
        g.lambda[size_t(i)] = lf.lambda;
        g.f[size_t(i)] = lf.f;
        g.epsilon[size_t(i)] = std::abs(lf.f / (2.0 * lf.lambda));
    }
    return g;
}

}  // namespace epdyn

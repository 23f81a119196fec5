#pragma once

// Quasi-adiabatic machinery: instantaneous fixed points of the Riccati
// flow, the adiabatic-manifold derivative series with optimal
// truncation, the phase integral Psi, the switched-on discontinuity
// Delta (numeric quadrature and the three closed-form prototypes),
// delay-time solving, the piecewise stitched solution, and the
// level-curve construction of the maximal delay time.
//
// Everything is written for the R = R_minus chart; the inverse chart
// obeys the same equations under (lambda, f) -> (-lambda, -f), which is
// how segments that follow the large fixed point are handled.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "epdyn/integrate.hpp"
#include "epdyn/propagator.hpp"
#include "epdyn/special_functions.hpp"
#include "epdyn/spectral.hpp"
#include "epdyn/types.hpp"

namespace epdyn {

// ---------------------------------------------------------------------------
// Fixed points

struct FixedPoints {
    Complex R_ad, R_nad;
    bool ad_stable = false;  // Im lambda < 0
    bool degenerate = false; // |f| below cutoff: points are 0 and infinity
};

inline FixedPoints fixed_points(const Complex& lambda, const Complex& f) {
    if (lambda == Complex(0.0)) throw AtExceptionalPoint("fixed_points: lambda = 0");
    FixedPoints r;
    r.ad_stable = lambda.imag() < 0.0;
    if (std::abs(f) < 1e-300) {
        r.R_ad = 0.0;
        r.R_nad = Complex(std::numeric_limits<double>::infinity(), 0.0);
        r.degenerate = true;
        return r;
    }
    Complex s = std::sqrt(lambda * lambda - f * f);
    if ((s * std::conj(lambda)).real() < 0.0) s = -s;  // R_ad -> -f/(2 lambda)
    // cancellation-free forms of -(lambda/f)(1 -+ s/lambda)
    r.R_ad = -f / (lambda + s);
    r.R_nad = -(lambda + s) / f;
    return r;
}

inline FixedPoints fixed_points(const SpectralFrame& fr) {
    return fixed_points(fr.lambda, fr.f);
}

// ---------------------------------------------------------------------------
// Adiabatic-manifold series (optimally truncated derivative series)

struct ManifoldSeries {
    std::vector<Complex> terms;
    int N_op = 1;      // number of terms summed
    Complex value;     // optimally truncated partial sum
    bool diverged = false;  // |term1| >= |term0| and |term2| >= |term1|
};

namespace asymdetail {

template <int K>
ManifoldSeries manifold_series_impl(const DynamicsSource& src, double t,
                                    const std::optional<Complex>& hint, int N_max,
                                    double sign) {
    auto js = src.jets<double, K>(t, hint);
    Jet<Complex, K> lam = js.lambda * Complex(sign);
    Jet<Complex, K> f = js.f * Complex(sign);

    // R_ad(t) as a jet: -f / (lambda + s), s = sqrt(lambda^2 - f^2)
    Jet<Complex, K> disc = lam * lam - f * f;
    Complex s0 = std::sqrt(disc.value());
    if ((s0 * std::conj(lam.value())).real() < 0.0) s0 = -s0;
    Jet<Complex, K> s = sqrt_with_branch(disc, s0);
    Jet<Complex, K> term = -f / (lam + s);

    Jet<Complex, K> dop = reciprocal(lam * (2.0 * I)) * Complex(-1.0);  // -1/(2 i lambda)

    ManifoldSeries out;
    out.terms.reserve(size_t(N_max) + 1);
    out.terms.push_back(term.value());
    for (int n = 1; n <= N_max && n < K; ++n) {
        term = dop * derivative_jet(term);
        out.terms.push_back(term.value());
    }

    // first growth caps the sum.  Comparisons are guarded against the
    // arithmetic noise floor (relevant for static parameters, where all
    // higher terms vanish, and near zeros of f, where term 0 does).
    const auto& Tm = out.terms;
    double top = 0.0;
    for (const auto& v : Tm) top = std::max(top, std::abs(v));
    const double floor_mag = 1e-13 * top;
    int nop = int(Tm.size());
    for (size_t n = 2; n < Tm.size(); ++n) {
        if (std::abs(Tm[n - 1]) > floor_mag && std::abs(Tm[n]) >= std::abs(Tm[n - 1])) {
            nop = int(n);
            break;
        }
    }
    // growth straight from term 0 flags a violated expansion, but only
    // where the coupling is actually large (term 0 passes through zeros
    // of f, where the ratio test alone would misfire)
    const double eps0 = std::abs(f.value() / (2.0 * lam.value()));
    out.diverged = Tm.size() >= 2 && std::abs(Tm[1]) > std::abs(Tm[0]) && eps0 > 0.1;
    out.N_op = nop;
    out.value = 0.0;
    for (int n = 0; n < nop; ++n) out.value += Tm[size_t(n)];
    return out;
}

}  // namespace asymdetail

// Throws SeriesDiverged when the series grows from the first term on
// (quasi-adiabatic condition violated at this instant).
inline ManifoldSeries manifold_series(const DynamicsSource& src, double t,
                                      const std::optional<Complex>& hint = std::nullopt,
                                      int N_max = 32, bool follow_nonadiabatic = false) {
    const double sign = follow_nonadiabatic ? -1.0 : 1.0;
    ManifoldSeries m = (N_max <= 8)
                           ? asymdetail::manifold_series_impl<10>(src, t, hint, N_max, sign)
                           : asymdetail::manifold_series_impl<34>(src, t, hint, N_max, sign);
    if (m.diverged)
        throw SeriesDiverged("manifold_series: first-order term already grows at t = " +
                             std::to_string(t));
    return m;
}

// Non-throwing variant used by the stitched evaluator (divergence is
// reported through the flag).
inline ManifoldSeries manifold_series_flagged(const DynamicsSource& src, double t,
                                              const std::optional<Complex>& hint, int N_max,
                                              bool follow_nonadiabatic) {
    const double sign = follow_nonadiabatic ? -1.0 : 1.0;
    return (N_max <= 8) ? asymdetail::manifold_series_impl<10>(src, t, hint, N_max, sign)
                        : asymdetail::manifold_series_impl<34>(src, t, hint, N_max, sign);
}

// ---------------------------------------------------------------------------
// Psi(t) = -2 i int_{t*}^t lambda dt'

namespace asymdetail {

// integral of lambda over [a, b] with branch threading; returns the
// integral and lambda(b) for further continuation
inline std::pair<Complex, Complex> lambda_integral(const DynamicsSource& src, double a, double b,
                                                   Complex hint_at_a, int panels = 0) {
    if (a == b) return {Complex(0.0), hint_at_a};
    double per = src.period_hint();
    if (!std::isfinite(per)) per = std::abs(b - a);
    if (panels <= 0) panels = std::max(8, int(std::ceil(std::abs(b - a) / per * 64)));
    Complex total = 0.0;
    Complex hint = hint_at_a;
    for (int p = 0; p < panels; ++p) {
        const double x0 = a + (b - a) * p / panels;
        const double x1 = a + (b - a) * (p + 1) / panels;
        Complex local = hint;
        total += integrate_gk(
            [&](double u) {
                auto lf = src.eval(u, local);
                local = lf.lambda;
                return lf.lambda;
            },
            x0, x1, 1e-13);
        hint = src.eval(x1, hint).lambda;
    }
    return {total, hint};
}

}  // namespace asymdetail

inline Complex psi(const DynamicsSource& src, double t_star, double t,
                   const std::optional<Complex>& hint_at_star = std::nullopt) {
    Complex h = hint_at_star ? *hint_at_star : src.eval(t_star).lambda;
    auto [integral, ignore] = asymdetail::lambda_integral(src, t_star, t, h);
    (void)ignore;
    return -2.0 * I * integral;
}

// ---------------------------------------------------------------------------
// Discontinuity Delta = -i int f e^{-Psi} dt about a critical time

struct DeltaResult {
    Complex value;
    double t_lo = 0, t_hi = 0;
    bool converged = true;  // integrand decayed at both window ends
    double peak = 0;
};

namespace asymdetail {

// dense sampling of Psi and the integrand over a window, branch
// threaded left to right; cumulative composite Simpson
struct WindowScan {
    std::vector<double> t;
    std::vector<Complex> lam, f;
    std::vector<Complex> Psi;  // anchored at t_star

    void build(const DynamicsSource& src, double t_star, double lo, double hi, int n,
               const Complex& hint) {
        if (n % 2) ++n;
        t.resize(size_t(n) + 1);
        lam.resize(size_t(n) + 1);
        f.resize(size_t(n) + 1);
        Psi.resize(size_t(n) + 1);
        const double h = (hi - lo) / n;
        // thread the branch from t_star to lo, then across the window
        Complex hl = src.eval(t_star, hint).lambda;
        {
            const int steps = 256;
            for (int k = 1; k <= steps; ++k)
                hl = src.eval(t_star + (lo - t_star) * k / steps, hl).lambda;
        }
        std::optional<Complex> cur = hl;
        for (int i = 0; i <= n; ++i) {
            t[size_t(i)] = lo + h * i;
            auto lf = src.eval(t[size_t(i)], cur);
            cur = lf.lambda;
            lam[size_t(i)] = lf.lambda;
            f[size_t(i)] = lf.f;
        }
        // cumulative Simpson for int lambda dt
        std::vector<Complex> cum(size_t(n) + 1);
        cum[0] = 0.0;
        for (int i = 2; i <= n; i += 2)
            cum[size_t(i)] = cum[size_t(i - 2)] +
                             (h / 3.0) * (lam[size_t(i - 2)] + 4.0 * lam[size_t(i - 1)] +
                                          lam[size_t(i)]);
        for (int i = 1; i <= n; i += 2) {
            // half-cell from the even neighbour below
            const Complex a = lam[size_t(i - 1)], b = lam[size_t(i)],
                          c = (i + 1 <= n) ? lam[size_t(i + 1)] : 2.0 * b - a;
            cum[size_t(i)] = cum[size_t(i - 1)] + (h / 12.0) * (5.0 * a + 8.0 * b - c);
        }
        // anchor at t_star (inside [lo, hi])
        const double x = (t_star - lo) / h;
        const size_t i0 = size_t(std::clamp<long>(long(std::lround(x)), 0, n));
        Complex base = cum[i0];
        // small correction if t_star is off-node
        const double dt_off = t_star - t[i0];
        base += lam[i0] * dt_off;
        for (int i = 0; i <= n; ++i) Psi[size_t(i)] = -2.0 * I * (cum[size_t(i)] - base);
    }
};

}  // namespace asymdetail

// Window rule: expand outward from t* in steps of period/64 until the
// integrand magnitude falls below 1e-12 of its peak, stopping early at
// a turning point where it starts to regrow (adjacent critical times
// contribute their own Delta), capped at one period per side.
// chart_sign = -1 computes the inverse-chart discontinuity, i.e. the
// same quadrature with (lambda, f) -> (-lambda, -f).
inline DeltaResult discontinuity(const DynamicsSource& src, double t_star,
                                 const std::optional<Complex>& hint = std::nullopt,
                                 int chart_sign = +1) {
    double per = src.period_hint();
    if (!std::isfinite(per)) per = 100.0;
    const Complex h0 = hint ? *hint : src.eval(t_star).lambda;
    const double cs = chart_sign < 0 ? -1.0 : 1.0;

    const double step = per / 64.0;
    const double peak = std::abs(src.eval(t_star, h0).f);

    // probe one side; returns the chosen edge and whether it decayed
    auto probe_side = [&](double dir) -> std::pair<double, bool> {
        Complex cum = 0.0;  // int_{t*}^{edge} lambda
        Complex hl = h0;
        double best_t = t_star + dir * per;
        double best_val = std::numeric_limits<double>::infinity();
        int rising = 0;
        for (int k = 1; k <= 64; ++k) {
            const double a = t_star + dir * step * (k - 1);
            const double b = t_star + dir * step * k;
            auto [seg, hnew] = asymdetail::lambda_integral(src, a, b, hl, 4);
            cum += seg;
            hl = hnew;
            const double re_psi_c = cs * (-2.0 * I * cum).real();
            const double val = std::abs(src.eval(b, hl).f) * std::exp(-re_psi_c);
            if (val <= 1e-12 * peak) return {b, true};
            if (val < best_val) {
                best_val = val;
                best_t = b;
                rising = 0;
            } else if (++rising >= 3) {
                return {best_t, best_val <= 1e-9 * peak};
            }
        }
        return {best_t, best_val <= 1e-9 * peak};
    };

    auto [hi, ok_hi] = probe_side(+1.0);
    auto [lo, ok_lo] = probe_side(-1.0);

    asymdetail::WindowScan w;
    const int n = 1 << 15;
    w.build(src, t_star, lo, hi, n, h0);
    // composite Simpson of f_c e^{-Psi_c}
    Complex sum = 0.0;
    const double h = (hi - lo) / n;
    auto g = [&](size_t i) { return cs * w.f[i] * std::exp(-cs * w.Psi[i]); };
    for (int i = 0; i + 2 <= n; i += 2)
        sum += (h / 3.0) * (g(size_t(i)) + 4.0 * g(size_t(i + 1)) + g(size_t(i + 2)));

    DeltaResult r;
    r.value = -I * sum;
    r.t_lo = lo;
    r.t_hi = hi;
    r.converged = ok_hi && ok_lo;
    r.peak = peak;
    return r;
}

// ---------------------------------------------------------------------------
// Closed-form prototype discontinuities and delay laws

enum class DelaySource {
    NumericQuadrature,
    CircularAnalytic,
    LinearAnalytic,
    EllipticalAnalytic,
    LevelCurve,
};

inline std::string to_string(DelaySource s) {
    switch (s) {
        case DelaySource::NumericQuadrature: return "numeric-quadrature";
        case DelaySource::CircularAnalytic: return "circular-analytic";
        case DelaySource::LinearAnalytic: return "linear-analytic";
        case DelaySource::EllipticalAnalytic: return "elliptical-analytic";
        case DelaySource::LevelCurve: return "level-curve";
    }
    return "?";
}

// Circular: |Delta| = pi e^{-1/(2 eps)}.  The sign is fixed by the
// general quadrature (and by the elliptical formula's circular limit)
// to be positive real.
inline Complex delta_analytic(const LambdaPrototype& p) {
    switch (p.kind) {
        case PrototypeKind::Circular:
            return Complex(pi * std::exp(-0.5 / p.epsilon()), 0.0);
        case PrototypeKind::Linear:
            return -I * p.f_star * std::sqrt(pi / p.lambda_im_dot) *
                   std::exp(-p.lambda_re * p.lambda_re / p.lambda_im_dot);
        case PrototypeKind::Elliptical: {
            const double B = p.T * p.lambda_im_dot / pi;
            const double disc = B * B - p.lambda_re * p.lambda_re;
            const Complex pref = -2.0 * I * p.T * p.f_star;
            if (disc >= 0.0) {
                const double x = (2.0 * p.T / pi) * std::sqrt(disc);
                // e^{-(2T/pi) B} I0(x) assembled in log space
                const double expo = x - (2.0 * p.T / pi) * B;  // <= 0
                return pref * std::exp(expo) * bessel_i0e_scaled(x);
            }
            const double x = (2.0 * p.T / pi) * std::sqrt(-disc);
            return pref * std::exp(-(2.0 * p.T / pi) * B) * bessel_i0(I * x);
        }
    }
    return 0.0;
}

// (T/pi) arccos(2 eps log pi)
inline std::optional<double> delay_analytic_circular(double eps, double T) {
    const double x = 2.0 * eps * std::log(pi);
    if (x >= 1.0) return std::nullopt;
    return (T / pi) * std::acos(x);
}

// full linear-sweep law; quasi-adiabatic limit lambda_re / lambda_im_dot
inline std::optional<double> delay_analytic_linear(double lambda_re, double lambda_im_dot,
                                                   const Complex& f_star) {
    const double arg =
        1.0 + (lambda_im_dot / (lambda_re * lambda_re)) *
                  std::log(std::sqrt(lambda_im_dot / pi) / std::abs(f_star));
    if (arg < 0.0) return std::nullopt;
    return (lambda_re / lambda_im_dot) * std::sqrt(arg);
}

// ---------------------------------------------------------------------------
// Delay time from |Delta e^{Psi(t_+)}| = 1

struct DelayPrediction {
    double t_star = 0;
    Complex Delta;
    std::optional<double> t_plus;      // empty: no finite exit
    std::optional<double> t_plus_max;  // empty: not computed or infinite
    bool t_plus_max_infinite = false;
    DelaySource source = DelaySource::NumericQuadrature;
};

// Root of log|Delta| + Re Psi(t) = 0 for t > t_star, searched until the
// followed point restabilizes (next opposite critical time) or the
// domain ends.
inline DelayPrediction delay_time(const DynamicsSource& src, double t_star, const Complex& Delta,
                                  const std::optional<Complex>& hint = std::nullopt,
                                  std::optional<double> horizon = std::nullopt) {
    DelayPrediction out;
    out.t_star = t_star;
    out.Delta = Delta;
    out.source = DelaySource::NumericQuadrature;

    const double target = -std::log(std::abs(Delta));
    if (!std::isfinite(target)) return out;  // Delta = 0: never exits

    double per = src.period_hint();
    if (!std::isfinite(per)) per = 100.0;
    double t_end = horizon.value_or(t_star + 2.0 * per);
    const Complex h0 = hint ? *hint : src.eval(t_star).lambda;
    // restabilization bound: first critical time after t_star where the
    // followed point becomes stable again (scanned on the same sheet)
    try {
        auto cts = critical_times(src, t_star + 1e-9 * per, t_end, 1024, h0);
        for (const auto& c : cts) {
            if (c.sign < 0) {
                t_end = c.t_star;
                break;
            }
        }
    } catch (const TangentCrossing&) {
    }

    auto repsi = [&](double t) { return psi(src, t_star, t, h0).real(); };

    double lo = t_star, hi = t_end;
    if (repsi(t_end) < target) return out;  // never reaches the threshold
    // bisection (Re Psi is monotone up to the restabilization time)
    for (int it = 0; it < 64; ++it) {
        const double m = 0.5 * (lo + hi);
        if (repsi(m) < target)
            lo = m;
        else
            hi = m;
        if (hi - lo < 1e-9 * per) break;
    }
    out.t_plus = 0.5 * (lo + hi);
    return out;
}

// ---------------------------------------------------------------------------
// Stitched piecewise solution

struct StitchedSegment {
    double t_entry = 0, t_exit = 0;  // t_exit = end of data if no exit
    bool follows_nonadiabatic = false;
    std::vector<double> t_stars;  // destabilizations inside the segment
    std::vector<Complex> deltas;
    double eps_max = 0;
};

struct StitchedSolution {
    std::vector<double> t;
    std::vector<Complex> R;
    std::vector<double> log10_abs_R;
    std::vector<StitchedSegment> segments;
    bool quasi_adiabatic_violation = false;  // eps_max > 0.2 on some segment
    double eps_max = 0;
};

// Piecewise composition of per-segment solutions
//   y(t) = Y_ad(t) + [A + sum_i Theta(t - t*_i) Delta_i e^{-Phi(t*_i)}] e^{Phi(t)}
// in the chart of the followed fixed point; exit when |y| = 1, the exit
// value seeds the next segment in the opposite chart.
inline StitchedSolution stitched_solution(const DynamicsSource& src, Complex R0,
                                          const std::vector<double>& grid, int N_max = 8) {
    StitchedSolution out;
    out.t = grid;
    out.R.resize(grid.size());
    out.log10_abs_R.resize(grid.size());

    const double t0 = grid.front(), t1 = grid.back();
    double per = src.period_hint();
    if (!std::isfinite(per)) per = t1 - t0;

    auto cts = critical_times(src, t0, t1);

    // chart bookkeeping
    bool nonad = std::abs(R0) > 1.0;
    Complex y = nonad ? 1.0 / R0 : R0;

    size_t gi = 0;
    double t_entry = t0;
    Complex hint = src.eval(t0).lambda;

    while (gi < grid.size()) {
        StitchedSegment seg;
        seg.t_entry = t_entry;
        seg.follows_nonadiabatic = nonad;
        const double csign = nonad ? -1.0 : 1.0;

        // manifold value at entry; A from the entry condition
        auto m_entry = manifold_series_flagged(src, t_entry, hint, N_max, nonad);
        Complex A = y - m_entry.value;

        // destabilizations of the followed point ahead of (or at) entry
        std::vector<double> stars;
        for (const auto& c : cts) {
            const bool destab = nonad ? (c.sign < 0) : (c.sign > 0);
            if (destab && c.t_star >= t_entry - 1e-9 * per) stars.push_back(c.t_star);
        }

        // walk the grid, integrating Phi = -2 i int lambda_c incrementally
        Complex Phi = 0.0;
        Complex C = A;
        size_t star_idx = 0;
        double prev_t = t_entry;
        Complex seg_hint = hint;
        bool exited = false;

        for (; gi < grid.size(); ++gi) {
            const double t = grid[gi];
            if (t < t_entry) {  // grid point before entry (only at segment 0)
                out.R[gi] = nonad ? 1.0 / y : y;
                out.log10_abs_R[gi] = std::log10(std::abs(out.R[gi]));
                continue;
            }
            // advance Phi across [prev_t, t], absorbing any t* passed
            while (star_idx < stars.size() && stars[star_idx] <= t) {
                const double ts = stars[star_idx];
                if (ts > prev_t) {
                    auto [seg_int, hn] = asymdetail::lambda_integral(src, prev_t, ts, seg_hint, 2);
                    Phi += -2.0 * I * (csign * seg_int);
                    seg_hint = hn;
                    prev_t = ts;
                }
                auto d = discontinuity(src, ts, seg_hint, nonad ? -1 : +1);
                seg.t_stars.push_back(ts);
                seg.deltas.push_back(d.value);
                C += d.value * std::exp(-Phi);
                ++star_idx;
            }
            if (t > prev_t) {
                auto [seg_int, hn] = asymdetail::lambda_integral(src, prev_t, t, seg_hint, 2);
                Phi += -2.0 * I * (csign * seg_int);
                seg_hint = hn;
                prev_t = t;
            }
            auto lf = src.eval(t, seg_hint);
            const double eps_here = std::abs(lf.f / (2.0 * lf.lambda));
            seg.eps_max = std::max(seg.eps_max, eps_here);

            auto mv = manifold_series_flagged(src, t, seg_hint, N_max, nonad);
            const Complex yv = mv.value + C * std::exp(Phi);
            const Complex Rv = nonad ? 1.0 / yv : yv;
            out.R[gi] = Rv;
            out.log10_abs_R[gi] = std::log10(std::abs(Rv));

            if (std::abs(yv) >= 1.0 && t > t_entry) {
                // exit: segment hands over at |R| = 1
                seg.t_exit = t;
                t_entry = t;
                y = 1.0 / yv;
                nonad = !nonad;
                hint = seg_hint;
                exited = true;
                ++gi;
                break;
            }
        }
        if (!exited) seg.t_exit = t1;
        out.eps_max = std::max(out.eps_max, seg.eps_max);
        if (seg.eps_max > 0.2) out.quasi_adiabatic_violation = true;
        out.segments.push_back(std::move(seg));
        if (!exited) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Maximal delay time via the level curve of Re Psi through the complex
// zero z* of lambda

namespace asymdetail {

inline Complex lambda_sq_at(const DynamicsSource& src, const Complex& z) {
    if (!src.is_path()) {
        const Complex l = src.prototype().lambda_jet<Complex, 0>(z).value();
        return l * l;
    }
    auto pj = src.path().eval<Complex, 0>(z);
    const Complex a = pj.omega.value() + Complex(0.0, 0.5) * pj.gamma.value();
    return a * a + pj.g.value() * pj.g.value();
}

inline Complex dlambda_sq_at(const DynamicsSource& src, const Complex& z) {
    if (!src.is_path()) {
        auto lj = src.prototype().lambda_jet<Complex, 1>(z);
        return 2.0 * lj.value() * lj.derivative(1);
    }
    auto pj = src.path().eval<Complex, 1>(z);
    const Complex a = pj.omega.value() + Complex(0.0, 0.5) * pj.gamma.value();
    const Complex ad = pj.omega.derivative(1) + Complex(0.0, 0.5) * pj.gamma.derivative(1);
    return 2.0 * a * ad + 2.0 * pj.g.value() * pj.g.derivative(1);
}

// Psi~(z*) by integrating -2 i lambda along the straight segment from
// t* to z*, with the sqrt singularity at z* absorbed by u = 1 - v^2.
inline Complex psi_tilde_at_root(const DynamicsSource& src, double t_star, const Complex& zstar,
                                 const Complex& lambda_at_star) {
    const Complex d = zstar - t_star;
    // branch threading along the contour
    Complex hint = lambda_at_star;
    auto lam_at = [&](double u) {
        const Complex z = t_star + u * d;
        const Complex lsq = lambda_sq_at(src, z);
        Complex l = std::sqrt(lsq);
        if (std::abs(l - hint) > std::abs(l + hint)) l = -l;
        hint = l;
        return l;
    };
    // int_0^1 lambda(u) du = int_0^1 lambda(1 - v^2) 2 v dv
    const int n = 1 << 12;
    Complex sum = 0.0;
    const double h = 1.0 / n;
    std::vector<Complex> vals(size_t(n) + 1);
    for (int i = 0; i <= n; ++i) {
        const double v = 1.0 - h * i;  // walk from v=1 (u=0) to v=0 (u=1)
        vals[size_t(i)] = lam_at(1.0 - v * v) * 2.0 * v;
    }
    for (int i = 0; i + 2 <= n; i += 2)
        sum += (h / 3.0) * (vals[size_t(i)] + 4.0 * vals[size_t(i + 1)] + vals[size_t(i + 2)]);
    return -2.0 * I * (sum * d);
}

}  // namespace asymdetail

struct MaximalDelayResult {
    std::optional<double> t_plus_max;  // empty: infinite (no upper intersection)
    std::optional<double> t_minus_max;
    Complex z_star;
    double level = 0;  // Re Psi~(z*)
};

inline MaximalDelayResult maximal_delay(const DynamicsSource& src, double t_star,
                                        const std::optional<Complex>& hint = std::nullopt) {
    if (!src.supports_complex_time())
        throw InvalidConfig("maximal_delay: sampled paths do not extend to complex time");

    double per = src.period_hint();
    if (!std::isfinite(per)) per = 100.0;
    const Complex lam_star = hint ? *hint : src.eval(t_star).lambda;

    // circular prototype: the zero sits at complex infinity; the level
    // constant is the limit value 1/(2 eps) and the intersections solve
    // Re Psi(s) = 1/(2 eps) on the real axis directly
    if (!src.is_path() && src.prototype().kind == PrototypeKind::Circular) {
        const double K = 0.5 / src.prototype().epsilon();
        MaximalDelayResult out;
        out.level = K;
        out.z_star = Complex(t_star, -std::numeric_limits<double>::infinity());
        auto repsi = [&](double t) { return psi(src, t_star, t, lam_star).real(); };
        // Re Psi rises until the next restabilization, half a lambda
        // period after t*
        double lo = t_star, hi = t_star + 0.5 * per;
        if (repsi(hi) < K - 1e-9) {
            out.t_plus_max = std::nullopt;
        } else {
            for (int it = 0; it < 60; ++it) {
                const double m = 0.5 * (lo + hi);
                (repsi(m) < K) ? lo = m : hi = m;
            }
            out.t_plus_max = 0.5 * (lo + hi);
        }
        return out;
    }

    // Newton for lambda^2(z*) = 0 from a ring of seeds about t*.
    // lambda^2 has a simple zero there, so the step converges
    // quadratically; stop on step stagnation near machine precision.
    Complex zstar;
    bool found = false;
    const double seeds_im[] = {0.02, 0.05, 0.1, 0.2, -0.02, -0.05, -0.1, -0.2};
    for (double s : seeds_im) {
        Complex z(t_star, s * per);
        bool converged = false;
        for (int it = 0; it < 100; ++it) {
            const Complex F = asymdetail::lambda_sq_at(src, z);
            const Complex dF = asymdetail::dlambda_sq_at(src, z);
            if (dF == Complex(0.0)) break;
            const Complex dz = -F / dF;
            z += dz;
            if (std::abs(dz) < 1e-13 * std::max(per, std::abs(z))) {
                converged = true;
                break;
            }
        }
        if (converged && std::abs(z.imag()) > 1e-9 * per && finite(z)) {
            if (!found || std::abs(z - t_star) < std::abs(zstar - t_star)) {
                zstar = z;
                found = true;
            }
        }
    }
    if (!found) throw RootNotFound("maximal_delay: Newton failed from all seeds");

    MaximalDelayResult out;
    out.z_star = zstar;
    const Complex psi_star = asymdetail::psi_tilde_at_root(src, t_star, zstar, lam_star);
    const double K = psi_star.real();
    out.level = K;

    // Re Psi on the real axis, for the polish step
    auto repsi = [&](double t) { return psi(src, t_star, t, lam_star).real(); };

    // level-curve marching from z* along the three branch rays
    const Complex dlsq = asymdetail::dlambda_sq_at(src, zstar);
    const Complex c = std::sqrt(dlsq);
    const Complex kappa = -(4.0 * I / 3.0) * c;
    const double alpha0 = (pi - 2.0 * std::arg(kappa)) / 3.0;

    std::vector<double> crossings;
    const double hstep = 1e-3 * per;
    const double box_x = 2.0 * per, box_y = 1.0 * per;

    for (int ray = 0; ray < 3; ++ray) {
        const double alpha = alpha0 + ray * (2.0 * pi / 3.0);
        const double rho = 4.0 * hstep;
        Complex z = zstar + rho * std::exp(I * alpha);
        Complex lam = std::sqrt(asymdetail::lambda_sq_at(src, z));
        // orient the sqrt branch off the ray consistently: local model
        // lambda ~ c sqrt(z - z*), the half-angle taken along the ray
        {
            const Complex model = c * std::sqrt(rho) * std::exp(I * (0.5 * alpha));
            if (std::abs(lam - model) > std::abs(lam + model)) lam = -lam;
        }
        // Psi~ at the ray start from the local 3/2-power model, with the
        // phase continued along the ray (not the principal power)
        Complex psi_cur =
            psi_star + kappa * std::pow(rho, 1.5) * std::exp(I * (1.5 * alpha));
        Complex tangent_prev = std::exp(I * alpha);
        double prev_im = z.imag();

        for (int step = 0; step < 20000; ++step) {
            const Complex dpsi = -2.0 * I * lam;  // Psi~'
            if (std::abs(dpsi) < 1e-300) break;
            Complex tau = I * std::conj(dpsi);
            tau /= std::abs(tau);
            if ((tau * std::conj(tangent_prev)).real() < 0.0) tau = -tau;
            tangent_prev = tau;

            // predictor + trapezoid Psi update + corrector
            Complex zn = z + hstep * tau;
            Complex lam_n = std::sqrt(asymdetail::lambda_sq_at(src, zn));
            if (std::abs(lam_n - lam) > std::abs(lam_n + lam)) lam_n = -lam_n;
            Complex psi_n = psi_cur + (-2.0 * I) * 0.5 * (lam + lam_n) * (zn - z);
            for (int corr = 0; corr < 3; ++corr) {
                const Complex grad = std::conj(-2.0 * I * lam_n);
                const double G = psi_n.real() - K;
                if (std::abs(grad) < 1e-300) break;
                const Complex dz = -G * grad / std::norm(grad);
                const Complex z2 = zn + dz;
                Complex lam2 = std::sqrt(asymdetail::lambda_sq_at(src, z2));
                if (std::abs(lam2 - lam_n) > std::abs(lam2 + lam_n)) lam2 = -lam2;
                psi_n += (-2.0 * I) * 0.5 * (lam_n + lam2) * (z2 - zn);
                zn = z2;
                lam_n = lam2;
            }

            // real-axis crossing?
            if ((prev_im > 0) != (zn.imag() > 0) || zn.imag() == 0.0) {
                const double w = std::abs(z.imag()) / (std::abs(z.imag()) + std::abs(zn.imag()) + 1e-300);
                crossings.push_back(z.real() + w * (zn.real() - z.real()));
                break;
            }
            prev_im = zn.imag();
            z = zn;
            lam = lam_n;
            psi_cur = psi_n;
            if (std::abs(z.real() - t_star) > box_x || std::abs(z.imag()) > box_y) break;
        }
    }

    std::optional<double> sp, sm;
    for (double x : crossings) {
        if (x > t_star + 1e-9 * per) {
            if (!sp || x < *sp) sp = x;
        } else if (x < t_star - 1e-9 * per) {
            if (!sm || x > *sm) sm = x;
        }
    }
    if (crossings.empty() && !std::isfinite(K)) throw CurveEscaped("maximal_delay: no crossings");

    // polish against the real-axis Re Psi = K equation
    auto polish = [&](double s) -> double {
        double lo = s - 0.02 * per, hi = s + 0.02 * per;
        const double flo = repsi(lo) - K, fhi = repsi(hi) - K;
        if ((flo < 0) == (fhi < 0)) return s;  // no local bracket, keep the march
        const bool rising = fhi > flo;
        for (int it = 0; it < 60; ++it) {
            const double m = 0.5 * (lo + hi);
            const bool below = repsi(m) < K;
            if (below == rising)
                lo = m;
            else
                hi = m;
        }
        return 0.5 * (lo + hi);
    };
    if (sp) out.t_plus_max = polish(*sp);
    if (sm) out.t_minus_max = polish(*sm);
    return out;
}

}  // namespace epdyn

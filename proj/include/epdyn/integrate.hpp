#pragma once

// Numerical workhorses: an adaptive Dormand-Prince 5(4) stepper for
// small complex states and an adaptive Gauss-Kronrod 15 quadrature for
// complex line integrals.  The stepper controls error per unit time
// (local estimate <= tol * h) and clamps steps to land exactly on the
// requested output times, so no interpolant is needed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "epdyn/types.hpp"

namespace epdyn {

namespace ode {

inline Complex axpy(double a, const Complex& x, const Complex& y) { return a * x + y; }
inline double inf_norm(const Complex& x) { return std::abs(x); }

inline Vec2 axpy(double a, const Vec2& x, const Vec2& y) {
    return {a * x[0] + y[0], a * x[1] + y[1]};
}
inline double inf_norm(const Vec2& x) { return std::max(std::abs(x[0]), std::abs(x[1])); }

inline Mat2 axpy(double a, const Mat2& x, const Mat2& y) {
    Mat2 r;
    for (int i = 0; i < 4; ++i) r.a[size_t(i)] = a * x.a[size_t(i)] + y.a[size_t(i)];
    return r;
}
inline double inf_norm(const Mat2& x) { return max_abs(x); }

}  // namespace ode

struct StepStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

// Integrate y' = rhs(t, y) from grid.front() to grid.back(), invoking
// `emit(i, t, y)` at every grid time (including the first).  `post` runs
// after each accepted step and may rescale the state (renormalized
// evolution-operator variant); it returns a log-scale increment.
template <class State, class Rhs, class Emit>
StepStats integrate_dp54(Rhs&& rhs, std::vector<double> const& grid, State y, double tol,
                         Emit&& emit,
                         const std::function<double(double, State&)>& post = {}) {
    if (grid.size() < 2) throw InvalidConfig("integrate: need at least two grid times");
    if (!(tol >= 1e-13 && tol <= 1e-4)) throw InvalidConfig("integrate: tol outside [1e-13, 1e-4]");

    using ode::axpy;
    using ode::inf_norm;

    // Dormand-Prince coefficients
    static const double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
    static const double a21 = 1. / 5;
    static const double a31 = 3. / 40, a32 = 9. / 40;
    static const double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
    static const double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561,
                        a54 = -212. / 729;
    static const double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247,
                        a64 = 49. / 176, a65 = -5103. / 18656;
    static const double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192, b5 = -2187. / 6784,
                        b6 = 11. / 84;
    static const double e1 = 35. / 384 - 5179. / 57600, e3 = 500. / 1113 - 7571. / 16695,
                        e4 = 125. / 192 - 393. / 640, e5 = -2187. / 6784 + 92097. / 339200,
                        e6 = 11. / 84 - 187. / 2100, e7 = -1. / 40;

    StepStats st;
    const double t_begin = grid.front(), t_end = grid.back();
    const double span = t_end - t_begin;
    double t = t_begin;
    double h = std::min(span / 64.0, 1e-2 * span);

    emit(size_t(0), t, y);
    size_t next_out = 1;

    State k1 = rhs(t, y);
    ++st.rhs_evals;
    bool fsal_valid = true;

    while (next_out < grid.size()) {
        const double t_target = grid[next_out];
        while (t < t_target - 1e-14 * span) {
            double hs = std::min(h, t_target - t);
            if (hs < 1e-14 * std::max(span, 1.0))
                throw StepSizeUnderflow("integrate: step size underflow at t = " +
                                        std::to_string(t));
            if (!fsal_valid) {
                k1 = rhs(t, y);
                ++st.rhs_evals;
                fsal_valid = true;
            }
            State y2 = axpy(hs * a21, k1, y);
            State k2 = rhs(t + c2 * hs, y2);
            State y3 = axpy(hs * a32, k2, axpy(hs * a31, k1, y));
            State k3 = rhs(t + c3 * hs, y3);
            State y4 = axpy(hs * a43, k3, axpy(hs * a42, k2, axpy(hs * a41, k1, y)));
            State k4 = rhs(t + c4 * hs, y4);
            State y5 = axpy(hs * a54, k4,
                            axpy(hs * a53, k3, axpy(hs * a52, k2, axpy(hs * a51, k1, y))));
            State k5 = rhs(t + c5 * hs, y5);
            State y6 = axpy(hs * a65, k5,
                            axpy(hs * a64, k4,
                                 axpy(hs * a63, k3, axpy(hs * a62, k2, axpy(hs * a61, k1, y)))));
            State k6 = rhs(t + hs, y6);
            State ynew = axpy(hs * b6, k6,
                              axpy(hs * b5, k5,
                                   axpy(hs * b4, k4, axpy(hs * b3, k3, axpy(hs * b1, k1, y)))));
            State k7 = rhs(t + hs, ynew);
            st.rhs_evals += 6;

            State errv = axpy(hs * e7, k7,
                              axpy(hs * e6, k6,
                                   axpy(hs * e5, k5,
                                        axpy(hs * e4, k4, axpy(hs * e3, k3, axpy(hs * e1, k1,
                                                                                 State{}))))));
            const double sc = std::max(1.0, std::max(inf_norm(y), inf_norm(ynew)));
            const double err = inf_norm(errv) / sc;
            const double tol_step = tol * hs;  // error per unit time
            if (err <= tol_step || hs <= 1e-13 * std::max(span, 1.0)) {
                t += hs;
                y = ynew;
                k1 = k7;  // FSAL
                ++st.accepted;
                if (post) {
                    const double dlog = post(t, y);
                    if (dlog != 0.0) fsal_valid = false;  // state rescaled
                }
                double fac = (err > 0) ? 0.9 * std::pow(tol_step / err, 0.2) : 5.0;
                h = hs * std::clamp(fac, 0.2, 5.0);
            } else {
                ++st.rejected;
                double fac = 0.9 * std::pow(tol_step / err, 0.2);
                h = hs * std::clamp(fac, 0.1, 0.9);
            }
        }
        t = t_target;
        emit(next_out, t, y);
        ++next_out;
    }
    return st;
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod 15 on complex integrands over real intervals.

namespace detail {

inline const double qk15_x[8] = {.991455371120812639206854697526329,
                                 .949107912342758524526189684047851,
                                 .864864423359769072789712788640926,
                                 .741531185599394439863864773280788,
                                 .58608723546769113029414483825873,
                                 .405845151377397166906606412076961,
                                 .207784955007898467600689403773245,
                                 0.};
inline const double qk15_wk[8] = {.02293532201052922496373200805897,
                                  .063092092629978553290700663189204,
                                  .104790010322250183839876322541518,
                                  .140653259715525918745189590510238,
                                  .16900472663926790282658342659855,
                                  .190350578064785409913256402421014,
                                  .204432940075298892414161999234649,
                                  .209482141084727828012999174891714};
inline const double qk15_wg[4] = {.129484966168869693270611432679082,
                                  .27970539148927666790146777142378,
                                  .381830050505118944950369775488975,
                                  .417959183673469387755102040816327};

template <class F>
void qk15(F&& f, double a, double b, Complex& result, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const Complex fc = f(c);
    Complex resg = qk15_wg[3] * fc;
    Complex resk = qk15_wk[7] * fc;
    for (int j = 0; j < 7; ++j) {
        const double x = h * qk15_x[j];
        const Complex f1 = f(c - x), f2 = f(c + x);
        resk += qk15_wk[j] * (f1 + f2);
        if (j % 2 == 1) resg += qk15_wg[j / 2] * (f1 + f2);
    }
    result = resk * h;
    err = std::abs(resk - resg) * std::abs(h);
}

template <class F>
Complex gk_adaptive(F&& f, double a, double b, double abstol, int depth) {
    Complex r;
    double e;
    qk15(f, a, b, r, e);
    if (e <= abstol || depth >= 48 || (b - a) < 1e-15 * std::abs(b + a)) return r;
    const double m = 0.5 * (a + b);
    return gk_adaptive(f, a, m, 0.5 * abstol, depth + 1) +
           gk_adaptive(f, m, b, 0.5 * abstol, depth + 1);
}

}  // namespace detail

template <class F>
Complex integrate_gk(F&& f, double a, double b, double abstol = 1e-12) {
    if (a == b) return Complex(0.0);
    return detail::gk_adaptive(f, a, b, abstol, 0);
}

}  // namespace epdyn

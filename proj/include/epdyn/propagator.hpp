#pragma once

// Exact time evolution in the parallel-transported eigenbasis: the 2x2
// evolution operator, eigenvector populations against the adiabatic
// prediction, a lab-basis cross-check route, and the Riccati flow of
// the relative transition amplitude R with pole-safe chart switching.

#include <cmath>
#include <optional>
#include <vector>

#include "epdyn/integrate.hpp"
#include "epdyn/spectral.hpp"
#include "epdyn/types.hpp"

namespace epdyn {

inline std::vector<double> make_grid(double t0, double t1, int n) {
    std::vector<double> g(size_t(n) + 1);
    for (int i = 0; i <= n; ++i) g[size_t(i)] = t0 + (t1 - t0) * i / n;
    return g;
}

struct EvolutionState {
    Mat2 U;
    double t = 0;
    Complex c_minus, c_plus;
    double log_scale = 0;  // true U = e^{log_scale} * U
};

struct UTrajectory {
    std::vector<double> t;
    std::vector<Mat2> U;
    std::vector<double> log_scale;
    StepStats stats;
    double max_det_drift = 0;

    EvolutionState state(size_t i, const Vec2& c0 = {Complex(1), Complex(0)}) const {
        EvolutionState s;
        s.U = U[i];
        s.t = t[i];
        s.log_scale = log_scale[i];
        const Vec2 c = U[i].apply(c0);
        s.c_minus = c[0];
        s.c_plus = c[1];
        return s;
    }
};

namespace detail {

struct BranchAnchor {
    std::optional<Complex> hint;
};

inline double det_drift(const Mat2& U, double log_scale) {
    const Complex d = U.det();
    if (d == Complex(0)) return 1.0;
    const Complex logd = std::log(d) + 2.0 * log_scale;
    return std::abs(std::exp(logd) - 1.0);
}

}  // namespace detail

// d/dt U = -i [[-lambda, -f], [f, lambda]] U with U(0) = 1.
// If `renormalize` is set the largest entry magnitude is factored out
// whenever it exceeds 1e150 and accounted in log_scale; otherwise
// entries beyond 1e300 raise OverflowError.
inline UTrajectory propagate_U(const DynamicsSource& src, const std::vector<double>& grid,
                               double tol = 1e-10, bool renormalize = false,
                               const std::optional<Complex>& lambda_hint = std::nullopt) {
    UTrajectory out;
    out.t = grid;
    out.U.resize(grid.size());
    out.log_scale.assign(grid.size(), 0.0);

    detail::BranchAnchor anchor;
    anchor.hint = src.eval(grid.front(), lambda_hint).lambda;
    double log_scale = 0.0;

    auto rhs = [&](double t, const Mat2& U) {
        auto lf = src.eval(t, anchor.hint);
        Mat2 G;  // -i [[-lambda, -f], [f, lambda]]
        G(0, 0) = I * lf.lambda;
        G(0, 1) = I * lf.f;
        G(1, 0) = -I * lf.f;
        G(1, 1) = -I * lf.lambda;
        return G * U;
    };
    auto post = [&](double t, Mat2& U) -> double {
        anchor.hint = src.eval(t, anchor.hint).lambda;
        const double m = max_abs(U);
        if (renormalize) {
            if (m > 1e150) {
                for (auto& x : U.a) x /= m;
                log_scale += std::log(m);
                return std::log(m);
            }
        } else if (m > 1e300) {
            throw OverflowError("propagate_U: entries exceed 1e300 (use renormalized variant)");
        }
        return 0.0;
    };
    auto emit = [&](size_t i, double, const Mat2& U) {
        out.U[i] = U;
        out.log_scale[i] = log_scale;
        out.max_det_drift = std::max(out.max_det_drift, detail::det_drift(U, log_scale));
    };
    out.stats = integrate_dp54<Mat2>(rhs, grid, Mat2::identity(), tol, emit, post);
    return out;
}

struct PopulationTrajectory {
    std::vector<double> t;
    std::vector<Complex> c_minus, c_plus;
    std::vector<Complex> c_ad_minus;    // e^{-i int lambda_-} = e^{+i int lambda}
    std::vector<double> im_lambda;      // Im lambda(t)
    std::vector<double> int_im_lambda;  // int_0^t Im lambda dt'
    StepStats stats;
};

// Populations c(t) = U(t) c(0) integrated directly as a 2-vector, plus
// the adiabatic prediction and the dynamical-gain columns.
inline PopulationTrajectory propagate_populations(const DynamicsSource& src, const Vec2& c0,
                                                  const std::vector<double>& grid,
                                                  double tol = 1e-10,
                                                  const std::optional<Complex>& lambda_hint =
                                                      std::nullopt) {
    PopulationTrajectory out;
    out.t = grid;
    out.c_minus.resize(grid.size());
    out.c_plus.resize(grid.size());
    out.c_ad_minus.resize(grid.size());
    out.im_lambda.resize(grid.size());
    out.int_im_lambda.resize(grid.size());

    detail::BranchAnchor anchor;
    anchor.hint = src.eval(grid.front(), lambda_hint).lambda;

    auto rhs = [&](double t, const Vec2& c) {
        auto lf = src.eval(t, anchor.hint);
        return Vec2{I * (lf.lambda * c[0] + lf.f * c[1]), -I * (lf.f * c[0] + lf.lambda * c[1])};
    };
    auto post = [&](double t, Vec2&) -> double {
        anchor.hint = src.eval(t, anchor.hint).lambda;
        return 0.0;
    };
    auto emit = [&](size_t i, double, const Vec2& c) {
        out.c_minus[i] = c[0];
        out.c_plus[i] = c[1];
    };
    out.stats = integrate_dp54<Vec2>(rhs, grid, c0, tol, emit, post);

    // cumulative int lambda dt on the output grid
    Complex accum = 0.0;
    std::optional<Complex> hint = src.eval(grid.front(), lambda_hint).lambda;
    for (size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) {
            Complex local_hint = *hint;
            accum += integrate_gk(
                [&](double u) {
                    auto lf = src.eval(u, local_hint);
                    local_hint = lf.lambda;
                    return lf.lambda;
                },
                grid[i - 1], grid[i], 1e-13);
            hint = src.eval(grid[i], local_hint).lambda;
        }
        out.c_ad_minus[i] = std::exp(I * accum);
        out.im_lambda[i] = src.eval(grid[i], hint).lambda.imag();
        out.int_im_lambda[i] = accum.imag();
    }
    return out;
}

// Lab-basis route: integrate x' = -i M(t) x and project on the
// instantaneous eigenvectors afterwards.  Cross-check for the
// eigenbasis formulation, which depends on derivative data through f.
inline PopulationTrajectory propagate_lab(const DynamicsSource& src, const Vec2& c0,
                                          const std::vector<double>& grid, double tol = 1e-10) {
    if (!src.is_path()) throw InvalidConfig("propagate_lab: needs a parameter path");
    const PathInstance& path = src.path();

    // initial lab vector from the t0 frame
    ReducedParams p0 = path.at(grid.front());
    ReducedParams d0 = path.derivative_at(grid.front());
    SpectralFrame fr = spectral_frame(p0, d0);
    Vec2 x{c0[0] * fr.r_minus[0] + c0[1] * fr.r_plus[0],
           c0[0] * fr.r_minus[1] + c0[1] * fr.r_plus[1]};

    auto rhs = [&](double t, const Vec2& v) {
        ReducedParams p = path.at(t);
        const Complex a = matrix_a(p);
        return Vec2{-I * (-a * v[0] + p.g * v[1]), -I * (p.g * v[0] + a * v[1])};
    };

    PopulationTrajectory out;
    out.t = grid;
    out.c_minus.resize(grid.size());
    out.c_plus.resize(grid.size());

    std::vector<Vec2> xs(grid.size());
    auto emit = [&](size_t i, double, const Vec2& v) { xs[i] = v; };
    out.stats = integrate_dp54<Vec2>(rhs, grid, x, tol, emit);

    // project with branch-continuous frames
    std::optional<SpectralFrame> prev = fr;
    for (size_t i = 0; i < grid.size(); ++i) {
        ReducedParams p = path.at(grid[i]);
        ReducedParams d = path.derivative_at(grid[i]);
        SpectralFrame f2 = spectral_frame(p, d, prev);
        prev = f2;
        const Vec2 lm = left_minus(f2), lp = left_plus(f2);
        out.c_minus[i] = lm[0] * xs[i][0] + lm[1] * xs[i][1];
        out.c_plus[i] = lp[0] * xs[i][0] + lp[1] * xs[i][1];
    }
    return out;
}

// Relative non-adiabatic transition amplitudes from the evolution operator.
struct RPair {
    Complex R_minus, R_plus;
    Complex product;  // R_minus * R_plus
};

inline RPair R_from_U(const Mat2& U) {
    if (std::abs(U(0, 0)) < 1e-300 || std::abs(U(1, 1)) < 1e-300)
        throw DivisionNearZero("R_from_U: diagonal entry below 1e-300");
    RPair r;
    r.R_minus = U(1, 0) / U(0, 0);
    r.R_plus = U(0, 1) / U(1, 1);
    r.product = r.R_minus * r.R_plus;
    return r;
}

// ---------------------------------------------------------------------------
// Riccati flow of R = R_minus with projective chart switching

enum class Chart { R, Inverse };

struct TransitionAmplitude {
    Chart chart = Chart::R;
    Complex value;  // R in the R chart, 1/R in the inverse chart
    double t = 0;

    double abs_R() const {
        const double v = std::abs(value);
        return chart == Chart::R ? v : (v == 0.0 ? std::numeric_limits<double>::infinity()
                                                 : 1.0 / v);
    }
    double log10_abs_R() const {
        const double v = std::abs(value);
        if (v == 0.0)
            return chart == Chart::R ? -std::numeric_limits<double>::infinity()
                                     : std::numeric_limits<double>::infinity();
        return chart == Chart::R ? std::log10(v) : -std::log10(v);
    }
    Complex R() const { return chart == Chart::R ? value : 1.0 / value; }
};

// Direct integration of R' = -2 i lambda R - i f (1 + R^2).  The
// inverse chart S = 1/R obeys the same equation with the opposite
// signs (the R_plus equation); switching happens on the hysteresis
// band [0.8, 1.25]: a chart is left only when |value| >= 1.25, which
// re-enters the other chart at |value| <= 0.8.
inline std::vector<TransitionAmplitude> propagate_R(const DynamicsSource& src, Complex R0,
                                                    const std::vector<double>& grid,
                                                    double tol = 1e-10,
                                                    const std::optional<Complex>& lambda_hint =
                                                        std::nullopt) {
    std::vector<TransitionAmplitude> out(grid.size());

    detail::BranchAnchor anchor;
    anchor.hint = src.eval(grid.front(), lambda_hint).lambda;
    Chart chart = Chart::R;
    Complex y0 = R0;
    if (std::abs(y0) >= 1.25) {
        chart = Chart::Inverse;
        y0 = 1.0 / y0;
    }

    auto rhs = [&](double t, const Complex& y) {
        auto lf = src.eval(t, anchor.hint);
        if (chart == Chart::R) return -2.0 * I * lf.lambda * y - I * lf.f * (1.0 + y * y);
        return 2.0 * I * lf.lambda * y + I * lf.f * (1.0 + y * y);
    };
    auto post = [&](double t, Complex& y) -> double {
        anchor.hint = src.eval(t, anchor.hint).lambda;
        if (std::abs(y) >= 1.25) {
            y = 1.0 / y;
            chart = (chart == Chart::R) ? Chart::Inverse : Chart::R;
            return 1.0;  // invalidate FSAL
        }
        return 0.0;
    };
    auto emit = [&](size_t i, double t, const Complex& y) {
        out[i] = TransitionAmplitude{chart, y, t};
    };
    integrate_dp54<Complex>(rhs, grid, y0, tol, emit, post);
    return out;
}

// First |R| = 1 crossing after t_from (grid resolution + local linear
// refinement in log|R|).  Returns nothing if |R| stays on one side.
inline std::optional<double> first_unit_crossing(const std::vector<TransitionAmplitude>& traj,
                                                 double t_from, bool rising) {
    for (size_t i = 1; i < traj.size(); ++i) {
        if (traj[i].t <= t_from) continue;
        const double a = traj[i - 1].log10_abs_R(), b = traj[i].log10_abs_R();
        if (!std::isfinite(a) || !std::isfinite(b)) continue;
        const bool cross = rising ? (a < 0 && b >= 0) : (a > 0 && b <= 0);
        if (cross) {
            const double w = a / (a - b);
            return traj[i - 1].t + w * (traj[i].t - traj[i - 1].t);
        }
    }
    return std::nullopt;
}

}  // namespace epdyn

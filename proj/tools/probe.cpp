// scratch probe, not part of the deliverable build
#include <cstdio>

#include "epdyn/integrate.hpp"
#include "epdyn/path.hpp"
#include "epdyn/propagator.hpp"
#include "epdyn/prototypes.hpp"
#include "epdyn/spectral.hpp"

using namespace epdyn;

static Complex R_ad_of(const Complex& lam, const Complex& f) {
    Complex s = std::sqrt(lam * lam - f * f);
    if ((s * std::conj(lam)).real() < 0) s = -s;
    return -(lam / f) * (1.0 - s / lam);
}

static Complex psi_of(const DynamicsSource& src, double ts, double t, Complex lam_at_ts) {
    Complex hint = lam_at_ts;
    return -2.0 * I * integrate_gk(
                          [&](double u) {
                              auto lf = src.eval(u, hint);
                              hint = lf.lambda;
                              return lf.lambda;
                          },
                          ts, t, 1e-13);
}

int main() {
    // --- A: chirality under the principal branch at t=0 --------------------
    for (int dir : {+1, -1}) {
        PathConfig c;
        c.kind = PathKind::Circular;
        c.r = 0.1;
        c.gamma = 1.0;
        c.T = 45.0;
        c.phi0 = 0.0;
        c.direction = dir;
        DynamicsSource src{make_path(c)};
        auto grid = make_grid(0.0, c.T, 2048);
        auto pop = propagate_populations(src, {Complex(1), Complex(0)}, grid, 1e-10);
        const double ratio = std::abs(pop.c_plus.back() / pop.c_minus.back());
        auto R = propagate_R(src, 0.0, grid, 1e-10);
        std::printf("A dir=%+d  |c+/c-|(T) = %.4g   |R(T)| = %.4g\n", dir, ratio,
                    R.back().abs_R());
    }

    // --- B: circular Delta quadrature vs pi e^{-1/2eps} ---------------------
    {
        LambdaPrototype pr;
        pr.kind = PrototypeKind::Circular;
        pr.r = 0.1;
        pr.gamma = 1.0;
        pr.T = 100.0;
        DynamicsSource src{pr};
        const double eps = pr.epsilon();
        const double ts = 1.5 * pr.T;
        Complex lam_ts = src.eval(ts).lambda;
        auto integrand = [&](double u) {
            auto lf = src.eval(u);
            return lf.f * std::exp(-psi_of(src, ts, u, lam_ts));
        };
        Complex Delta = -I * integrate_gk(integrand, ts - pr.T, ts + pr.T, 1e-14);
        std::printf("B proto: Delta = (%.6g, %.6g)  pi e^{-1/2eps} = %.6g  eps=%.4g\n",
                    Delta.real(), Delta.imag(), pi * std::exp(-0.5 / eps), eps);
    }
    {
        PathConfig c;
        c.kind = PathKind::Circular;
        c.r = 0.1;
        c.gamma = 1.0;
        c.T = 100.0;
        c.phi0 = pi;
        c.direction = -1;
        c.periods = 2;
        DynamicsSource src{make_path(c)};
        auto cts = critical_times(src, 0.0, 2.0 * c.T);
        double ts = 0;
        for (auto& q : cts)
            if (q.sign > 0) ts = q.t_star;
        Complex lam_ts = src.eval(ts, src.eval(0.0).lambda).lambda;
        auto integrand = [&](double u) {
            auto lf = src.eval(u, lam_ts);
            return lf.f * std::exp(-psi_of(src, ts, u, lam_ts));
        };
        Complex Delta = -I * integrate_gk(integrand, ts - 0.5 * c.T, ts + 0.5 * c.T, 1e-14);
        std::printf("B path:  t*=%.4g  Delta = (%.6g, %.6g)  |Delta| = %.6g\n", ts, Delta.real(),
                    Delta.imag(), std::abs(Delta));
    }

    // --- C: switched coefficient from the actual Riccati flow ---------------
    {
        // linear prototype: Delta formula here is an exact Gaussian
        LambdaPrototype pr;
        pr.kind = PrototypeKind::Linear;
        pr.lambda_re = 0.3;
        pr.lambda_im_dot = 0.01;
        pr.f_star = Complex(0.0, 0.02);
        DynamicsSource src{pr};
        const double t0 = -40.0, t1 = 20.0;
        auto lf0 = src.eval(t0);
        auto grid = make_grid(t0, t1, 4000);
        auto R = propagate_R(src, R_ad_of(lf0.lambda, lf0.f), grid, 1e-12);
        const Complex Dformula =
            -I * pr.f_star * std::sqrt(pi / pr.lambda_im_dot) *
            std::exp(-pr.lambda_re * pr.lambda_re / pr.lambda_im_dot);
        for (double tq : {8.0, 12.0, 16.0}) {
            size_t i = size_t((tq - t0) / (t1 - t0) * 4000);
            auto lfq = src.eval(grid[i]);
            const Complex C =
                (R[i].R() - R_ad_of(lfq.lambda, lfq.f)) * std::exp(-psi_of(src, 0.0, grid[i], src.eval(0.0).lambda));
            std::printf("C linear t=%5.1f  C = (%.4g, %.4g)   formula = (%.4g, %.4g)\n", tq,
                        C.real(), C.imag(), Dformula.real(), Dformula.imag());
        }
    }
    {
        // circular prototype, eps = 0.05 for a quicker run
        LambdaPrototype pr;
        pr.kind = PrototypeKind::Circular;
        pr.r = 0.1;
        pr.gamma = 1.0;
        pr.T = 50.0;
        DynamicsSource src{pr};
        const double eps = pr.epsilon();
        const double ts = 1.5 * pr.T;
        const double t0 = 0.75 * pr.T;
        auto lf0 = src.eval(t0);
        auto grid = make_grid(t0, ts + 0.45 * pr.T, 4000);
        auto R = propagate_R(src, R_ad_of(lf0.lambda, lf0.f), grid, 1e-12);
        Complex lam_ts = src.eval(ts).lambda;
        for (double frac : {0.25, 0.32, 0.4}) {
            const double tq = ts + frac * pr.T;
            size_t i = 0;
            while (grid[i] < tq) ++i;
            auto lfq = src.eval(grid[i]);
            const Complex C = (R[i].R() - R_ad_of(lfq.lambda, lfq.f)) *
                              std::exp(-psi_of(src, ts, grid[i], lam_ts));
            std::printf("C circ t-ts=%.2fT  C = (%.4g, %.4g)  pi e = %.4g\n", frac, C.real(),
                        C.imag(), pi * std::exp(-0.5 / eps));
        }
    }

    // --- D: path (c) delays -------------------------------------------------
    for (double gos : {0.05, 0.08, 0.12, 0.16, 0.20, 0.24}) {
        PathConfig c;
        c.kind = PathKind::LinearOscillation;
        c.L = 0.2;
        c.gamma = 1.0;
        c.T = 200.0;
        c.g_offset = gos;
        c.phi0 = 0.0;
        c.direction = 1;
        c.periods = 2;
        DynamicsSource src{make_path(c)};
        const double ts = 0.5 * c.T;
        const double t0 = 0.10 * c.T;
        auto lf0 = src.eval(t0);
        auto grid = make_grid(t0, 1.05 * c.T, 8192);
        auto R = propagate_R(src, R_ad_of(lf0.lambda, lf0.f), grid, 1e-11);
        auto cross = first_unit_crossing(R, ts, true);
        if (cross)
            std::printf("D gos=%.2f  numeric (t+-t*)/T = %.4f\n", gos, (*cross - ts) / c.T);
        else
            std::printf("D gos=%.2f  numeric: no crossing before 1.05T\n", gos);
    }

    // --- D2: path (b) delay --------------------------------------------------
    {
        PathConfig c;
        c.kind = PathKind::TiltedEllipse;
        c.r = 0.1;
        c.gamma = 1.0;
        c.T = 200.0;
        c.e = 0.75;
        c.theta_aa = pi / 4;
        c.phi0 = 0.0;
        c.direction = 1;
        c.periods = 3;
        DynamicsSource src{make_path(c)};
        auto cts = critical_times(src, 0.0, 3.0 * c.T);
        std::printf("D2 ellipse criticals:");
        for (auto& q : cts) std::printf(" (%.3fT,%+d)", q.t_star / c.T, q.sign);
        std::printf("\n");
        // start near R_ad half a period before the second destabilization
        double ts = 0;
        for (auto& q : cts)
            if (q.sign > 0 && q.t_star > 0.9 * c.T) {
                ts = q.t_star;
                break;
            }
        const double t0 = ts - 0.45 * c.T;
        auto lf0 = src.eval(t0);  // integrator will use this principal sheet
        Complex R0 = R_ad_of(lf0.lambda, lf0.f);
        bool from_small = true;
        if (lf0.lambda.imag() > 0) {  // small FP repels on this sheet: start big
            R0 = 1.0 / R0;
            from_small = false;
        }
        auto grid = make_grid(t0, ts + 0.8 * c.T, 8192);
        auto R = propagate_R(src, R0, grid, 1e-11);
        auto cross = first_unit_crossing(R, ts, from_small);
        if (cross) std::printf("D2 ellipse t*=%.3fT delay = %.4fT\n", ts / c.T, (*cross - ts) / c.T);
        else std::printf("D2 ellipse: no crossing\n");
    }
    return 0;
}

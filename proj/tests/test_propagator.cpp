#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "epdyn/asymptotics.hpp"
#include "epdyn/path.hpp"
#include "epdyn/propagator.hpp"
#include "epdyn/prototypes.hpp"

using namespace epdyn;
using Catch::Approx;

namespace {

PathConfig fig1b(double T, double phi0, int direction, int periods = 1) {
    PathConfig c;
    c.kind = PathKind::Circular;
    c.r = 0.1;
    c.gamma = 1.0;
    c.T = T;
    c.phi0 = phi0;
    c.direction = direction;
    c.periods = periods;
    return c;
}

DynamicsSource static_source(double lambda_re, Complex f = 0.0) {
    LambdaPrototype p;
    p.kind = PrototypeKind::Linear;
    p.lambda_re = lambda_re;
    p.lambda_im_dot = 0.0;
    p.f_star = f;
    return DynamicsSource{p};
}

}  // namespace

TEST_CASE("uncoupled static evolution is diagonal", "[propagator][U]") {
    DynamicsSource src = static_source(1.0);
    auto grid = make_grid(0.0, 5.0, 16);
    auto tr = propagate_U(src, grid, 1e-12);

    // U(0) = identity
    CHECK(max_abs(tr.U.front()) == Approx(1.0));
    CHECK(std::abs(tr.U.front()(0, 1)) == 0.0);

    for (size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        // U_{-,-} = e^{-i int lambda_-} = e^{+i lambda t}
        CHECK(std::abs(tr.U[i](0, 0) - std::exp(I * t)) < 1e-10);
        CHECK(std::abs(tr.U[i](1, 1) - std::exp(-I * t)) < 1e-10);
        CHECK(std::abs(tr.U[i](0, 1)) < 1e-12);
        CHECK(std::abs(tr.U[i](1, 0)) < 1e-12);
    }
    CHECK(tr.max_det_drift < 1e-10);
}

TEST_CASE("chirality of the encircling loop", "[propagator][chirality]") {
    // the two senses of traversal end adiabatic vs non-adiabatic
    const Vec2 c0{Complex(1), Complex(0)};
    auto run = [&](int dir) {
        DynamicsSource src{make_path(fig1b(45.0, 0.0, dir))};
        auto grid = make_grid(0.0, 45.0, 1024);
        auto pop = propagate_populations(src, c0, grid, 1e-10);
        return std::abs(pop.c_plus.back() / pop.c_minus.back());
    };
    const double adiab = run(-1), nonad = run(+1);
    CHECK(adiab < 0.1);
    CHECK(nonad > 10.0);
}

TEST_CASE("return example: populations restored despite the interim transition",
          "[propagator][populations]") {
    DynamicsSource src{make_path(fig1b(45.0, pi, -1))};
    auto grid = make_grid(0.0, 45.0, 2048);
    auto pop = propagate_populations(src, {Complex(1), Complex(0)}, grid, 1e-10);
    const double ratio = std::norm(pop.c_minus.back()) / std::norm(pop.c_minus.front());
    CHECK(ratio == Approx(1.0).margin(0.15));
    // total integrated dynamical gain vanishes over the loop
    CHECK(std::abs(pop.int_im_lambda.back()) < 1e-6);
}

TEST_CASE("hermitian coupling keeps populations flat", "[propagator][populations]") {
    PathConfig c;
    c.kind = PathKind::Sampled;
    c.T = 12.0;
    for (int i = 0; i <= 96; ++i) c.samples.push_back({12.0 * i / 96.0, 0.0, 0.0, 1.0});
    DynamicsSource src{make_path(c)};
    auto grid = make_grid(0.0, 12.0, 64);
    auto pop = propagate_populations(src, {Complex(1), Complex(0)}, grid, 1e-11);
    for (auto& v : pop.c_minus) CHECK(std::abs(v) == Approx(1.0).margin(1e-9));
}

TEST_CASE("determinant stays at one", "[propagator][invariants]") {
    DynamicsSource src{make_path(fig1b(100.0, pi, -1))};
    auto grid = make_grid(0.0, 100.0, 1024);
    auto tr = propagate_U(src, grid, 1e-10);
    CHECK(tr.max_det_drift < 1e-8);
    CHECK(tr.max_det_drift < 100.0 * 1e-10 * 10.0);  // <= 100 tol (with margin)

    // halving tol keeps shrinking the drift: check the log-log slope
    std::vector<double> tols{1e-6, 1e-8, 1e-10};
    std::vector<double> drifts;
    for (double tol : tols) drifts.push_back(propagate_U(src, grid, tol).max_det_drift);
    for (size_t i = 1; i < drifts.size(); ++i) {
        const double slope = std::log(drifts[i - 1] / drifts[i]) /
                             std::log(tols[i - 1] / tols[i]);
        CHECK(slope > 0.5);
    }
}

TEST_CASE("renormalized evolution under strong gain", "[propagator][renorm]") {
    // pure gain: lambda = i, modes amplify as e^{t}
    PathConfig c;
    c.kind = PathKind::Sampled;
    c.T = 800.0;
    for (int i = 0; i <= 3200; ++i) c.samples.push_back({800.0 * i / 3200.0, 0.0, 2.0, 0.02});
    DynamicsSource src{make_path(c)};
    auto grid = make_grid(0.0, 800.0, 256);

    CHECK_THROWS_AS(propagate_U(src, grid, 1e-9), OverflowError);

    auto tr = propagate_U(src, grid, 1e-9, /*renormalize=*/true);
    CHECK(tr.log_scale.back() > 300.0);  // e^{t} growth absorbed into the scale
    CHECK(max_abs(tr.U.back()) < 1e151);
    CHECK(tr.max_det_drift < 1e-6);
}

TEST_CASE("propagation near the EP fails loudly", "[propagator][ep]") {
    PathConfig c = fig1b(50.0, 0.0, 1);
    c.kind = PathKind::DisplacedCircular;
    c.g_offset = c.r;  // loop touches the pinch point at phi = pi
    DynamicsSource src{make_path(c)};
    auto grid = make_grid(0.0, 50.0, 256);
    CHECK_THROWS_AS(propagate_U(src, grid, 1e-10), Error);
}

TEST_CASE("R from the evolution operator", "[propagator][R]") {
    SECTION("identity gives zero") {
        auto r = R_from_U(Mat2::identity());
        CHECK(r.R_minus == Complex(0.0));
        CHECK(r.R_plus == Complex(0.0));
    }
    SECTION("det identity R- R+ = 1 - 1/(U-- U++)") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int k = 0; k < 200; ++k) {
            // random unimodular matrix: fix three entries, solve the fourth
            Mat2 U;
            U(0, 0) = Complex(u(rng) + 1.5, u(rng));
            U(0, 1) = Complex(u(rng), u(rng));
            U(1, 0) = Complex(u(rng), u(rng));
            U(1, 1) = (Complex(1.0) + U(0, 1) * U(1, 0)) / U(0, 0);
            auto r = R_from_U(U);
            const Complex expect = 1.0 - 1.0 / (U(0, 0) * U(1, 1));
            CHECK(std::abs(r.product - expect) < 1e-12 * (1.0 + std::abs(expect)));
        }
    }
    SECTION("tiny denominator is rejected") {
        Mat2 U = Mat2::identity();
        U(0, 0) = 1e-305;
        CHECK_THROWS_AS(R_from_U(U), DivisionNearZero);
    }
}

TEST_CASE("long-time product R- R+ approaches one", "[propagator][R]") {
    DynamicsSource src{make_path(fig1b(100.0, pi, -1, 6))};
    auto grid = make_grid(0.0, 600.0, 6 * 512);
    auto tr = propagate_U(src, grid, 1e-10, true);
    // sample the late periods away from transition instants
    int checked = 0;
    for (size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        if (t < 250.0) continue;
        const double phase = std::fmod(t, 100.0) / 100.0;
        if (std::abs(phase - 0.5) < 0.15 || phase < 0.15 || phase > 0.85) continue;
        auto r = R_from_U(tr.U[i]);
        INFO("t = " << t);
        CHECK(std::abs(r.product - 1.0) < 0.05);
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("riccati flow matches the evolution-operator route", "[propagator][R]") {
    SECTION("decoupled flow stays at zero") {
        DynamicsSource src = static_source(0.7);
        auto grid = make_grid(0.0, 40.0, 128);
        auto R = propagate_R(src, 0.0, grid, 1e-11);
        for (auto& q : R) CHECK(std::abs(q.value) < 1e-13);
    }
    SECTION("square-wave run agrees with U ratios") {
        DynamicsSource src{make_path(fig1b(100.0, pi, -1, 2))};
        auto grid = make_grid(0.0, 200.0, 2048);
        auto R = propagate_R(src, 0.0, grid, 1e-10);
        auto tr = propagate_U(src, grid, 1e-10, true);
        int checked = 0;
        for (size_t i = 1; i < grid.size(); ++i) {
            auto rr = R_from_U(tr.U[i]);
            const double a = std::abs(rr.R_minus);
            if (a < 1e-6 || a > 1e6) continue;
            const double b = R[i].abs_R();
            CHECK(std::abs(b - a) <= 2e-6 * a);
            ++checked;
        }
        CHECK(checked > 1500);
    }
    SECTION("twenty randomized paths") {
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        int done = 0;
        while (done < 20) {
            PathConfig c;
            const int kind = int(u(rng) * 3);
            c.kind = kind == 0 ? PathKind::Circular
                               : (kind == 1 ? PathKind::DisplacedCircular
                                            : PathKind::TiltedEllipse);
            c.r = 0.05 + 0.1 * u(rng);
            c.gamma = 1.0;
            c.T = 60.0 + 80.0 * u(rng);
            c.phi0 = 2.0 * pi * u(rng);
            c.direction = u(rng) < 0.5 ? 1 : -1;
            c.g_offset = 0.15 * u(rng);
            c.e = 0.6 * u(rng);
            c.theta_aa = pi * u(rng);
            c.periods = 1;
            DynamicsSource src{make_path(c)};
            auto grid = make_grid(0.0, c.T, 512);
            std::vector<TransitionAmplitude> R;
            UTrajectory tr;
            try {
                R = propagate_R(src, 0.0, grid, 1e-10);
                tr = propagate_U(src, grid, 1e-10, true);
            } catch (const Error&) {
                continue;  // near-EP draw
            }
            ++done;
            for (size_t i = 1; i < grid.size(); i += 7) {
                auto rr = R_from_U(tr.U[i]);
                const double a = std::abs(rr.R_minus);
                if (a < 1e-6 || a > 1e6) continue;
                CHECK(std::abs(R[i].abs_R() - a) <= 5e-6 * a);
            }
        }
    }
}

TEST_CASE("inverse-chart flow is the image of the direct one", "[propagator][R]") {
    // 1/y(t) solves the R_- equation when y solves the R_+ one; check by
    // integrating both charts of the same trajectory
    DynamicsSource src{make_path(fig1b(100.0, pi, -1))};
    auto grid = make_grid(0.0, 100.0, 1024);
    const Complex R0(0.31, 0.17);
    auto direct = propagate_R(src, R0, grid, 1e-11);
    auto inverse = propagate_R(src, 1.0 / R0, grid, 1e-11);
    // the second run starts in the same chart but with the reciprocal
    // value, i.e. it tracks R_+ with R_+(0) = 1/R_-(0)
    int checked = 0;
    for (size_t i = 0; i < grid.size(); i += 5) {
        const double a = direct[i].abs_R();
        if (a < 1e-6 || a > 1e6) continue;
        const double b = 1.0 / inverse[i].abs_R();
        CHECK(std::abs(b - a) <= 2e-6 * a);
        ++checked;
    }
    CHECK(checked > 150);
}

TEST_CASE("chart switching respects the hysteresis band", "[propagator][chart]") {
    DynamicsSource src{make_path(fig1b(100.0, pi, -1, 3))};
    auto grid = make_grid(0.0, 300.0, 3 * 2048);
    auto R = propagate_R(src, 0.0, grid, 1e-10);
    int switches = 0;
    for (size_t i = 1; i < R.size(); ++i) {
        if (R[i].chart != R[i - 1].chart) ++switches;
        // the chart variable never runs far past the switching level
        CHECK(std::abs(R[i].value) < 2.0);
    }
    CHECK(switches >= 4);  // square wave crosses |R| = 1 repeatedly
}

TEST_CASE("adiabatic limit: slower loops stay closer to the fixed point",
          "[propagator][adiabatic-limit]") {
    const double T0 = 45.0;
    std::vector<double> maxR;
    double eps_max_last = 0;
    for (double mult : {1.0, 4.0, 16.0}) {
        PathConfig c = fig1b(T0 * mult, 0.0, -1);
        DynamicsSource src{make_path(c)};
        auto grid = make_grid(0.0, c.T, 2048);
        auto R = propagate_R(src, 0.0, grid, 1e-11);
        double m = 0;
        Complex hint = src.eval(0.0).lambda;
        double em = 0;
        for (size_t i = 0; i < grid.size(); ++i) {
            m = std::max(m, R[i].abs_R());
            auto lf = src.eval(grid[i], hint);
            hint = lf.lambda;
            em = std::max(em, std::abs(lf.f / (2.0 * lf.lambda)));
        }
        maxR.push_back(m);
        eps_max_last = em;
    }
    CHECK(maxR[1] < maxR[0]);
    CHECK(maxR[2] < maxR[1]);
    CHECK(maxR[2] <= 2.0 * eps_max_last);
}

TEST_CASE("lab-basis integration agrees with the eigenbasis route", "[propagator][lab]") {
    for (double phi0 : {0.0, pi}) {
        DynamicsSource src{make_path(fig1b(45.0, phi0, -1))};
        auto grid = make_grid(0.0, 45.0, 512);
        const Vec2 c0{Complex(1), Complex(0)};
        auto eig = propagate_populations(src, c0, grid, 1e-11);
        auto lab = propagate_lab(src, c0, grid, 1e-11);
        for (size_t i = 0; i < grid.size(); ++i) {
            const double scale =
                std::max({std::abs(eig.c_minus[i]), std::abs(eig.c_plus[i]), 1e-6});
            CHECK(std::abs(std::abs(eig.c_minus[i]) - std::abs(lab.c_minus[i])) <=
                  1e-6 * scale);
            CHECK(std::abs(std::abs(eig.c_plus[i]) - std::abs(lab.c_plus[i])) <= 1e-6 * scale);
        }
    }
}

TEST_CASE("global frame factor composes with the reduced evolution", "[propagator][frame]") {
    // alpha = e^{-i int (Omega - i Gamma/2)} beta with constant averages
    DynamicsSource src{make_path(fig1b(30.0, pi, -1))};
    auto grid = make_grid(0.0, 30.0, 128);
    auto pop = propagate_populations(src, {Complex(1), Complex(0)}, grid, 1e-10);
    std::vector<Complex> beta = pop.c_minus;
    auto r = restore_global_factor(beta, grid, [](double) { return 0.7; },
                                   [](double) { return 0.4; });
    for (size_t i = 0; i < grid.size(); ++i) {
        const Complex expect =
            std::exp(Complex(-0.2 * grid[i], -0.7 * grid[i])) * beta[i];
        CHECK(std::abs(r.alpha[i] - expect) < 1e-9 * (1.0 + std::abs(expect)));
    }
}

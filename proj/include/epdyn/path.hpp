#pragma once

// Closed-form control paths in (omega, gamma, g) space.  Each kind
// supplies truncated Taylor jets of the reduced parameters at real or
// complex time, so non-adiabatic couplings and the adiabatic-manifold
// series come out of exact derivatives rather than finite differences.
// The sampled kind interpolates through caller data with local
// degree-4 polynomials (Fornberg weights) and only supports real time.

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "epdyn/jet.hpp"
#include "epdyn/params.hpp"
#include "epdyn/types.hpp"

namespace epdyn {

enum class PathKind { Circular, DisplacedCircular, TiltedEllipse, LinearOscillation, Sampled };

inline std::string to_string(PathKind k) {
    switch (k) {
        case PathKind::Circular: return "circular";
        case PathKind::DisplacedCircular: return "displaced-circular";
        case PathKind::TiltedEllipse: return "tilted-ellipse";
        case PathKind::LinearOscillation: return "linear-oscillation";
        case PathKind::Sampled: return "sampled";
    }
    return "?";
}

struct PathSample {
    double t = 0, omega = 0, gamma = 0, g = 0;
};

struct PathConfig {
    PathKind kind = PathKind::Circular;
    double r = 0.1;         // loop radius (circular/displaced) or r0 (ellipse)
    double gamma = 1.0;     // fixed gain-loss asymmetry along the path
    double T = 100.0;       // encircling period
    int periods = 1;
    double phi0 = 0.0;
    int direction = -1;     // phi(t) = phi0 + direction * 2 pi t / T
    double g_offset = 0.0;  // displaced-circular, linear-oscillation
    double e = 0.0;         // ellipticity
    double theta_aa = 0.0;  // apoapsis angle
    double L = 0.0;         // oscillation amplitude along omega
    std::vector<PathSample> samples;

    double total_time() const { return T * periods; }

    PathConfig reversed() const {
        PathConfig c = *this;
        if (kind == PathKind::Sampled) {
            c.samples.clear();
            const double tt = total_time();
            for (auto it = samples.rbegin(); it != samples.rend(); ++it)
                c.samples.push_back({tt - it->t, it->omega, it->gamma, it->g});
        } else {
            c.phi0 = phi0 + direction * 2.0 * pi * periods;
            c.direction = -direction;
        }
        return c;
    }
};

inline void validate(const PathConfig& c) {
    if (!(c.T > 0)) throw InvalidConfig("path: T must be positive");
    if (c.periods < 1) throw InvalidConfig("path: periods must be a positive integer");
    if (c.direction != 1 && c.direction != -1) throw InvalidConfig("path: direction must be +-1");
    switch (c.kind) {
        case PathKind::Circular:
        case PathKind::DisplacedCircular:
            if (!(c.r > 0)) throw InvalidConfig("path: r must be positive");
            break;
        case PathKind::TiltedEllipse:
            if (!(c.r > 0)) throw InvalidConfig("path: r must be positive");
            if (!(c.e >= 0 && c.e < 1)) throw InvalidConfig("path: e must lie in [0,1)");
            break;
        case PathKind::LinearOscillation:
            if (!(c.L > 0)) throw InvalidConfig("path: L must be positive");
            break;
        case PathKind::Sampled: {
            if (c.samples.size() < 5) throw InvalidConfig("path: sampled kind needs >= 5 samples");
            const double per = c.T;
            size_t per_period = 0;
            for (size_t i = 1; i < c.samples.size(); ++i) {
                if (!(c.samples[i].t > c.samples[i - 1].t))
                    throw InvalidConfig("path: sample times must be strictly increasing");
                if (c.samples[i].t <= per) ++per_period;
            }
            if (per_period < 4) throw InvalidConfig("path: need at least 4 samples per period");
            break;
        }
    }
}

namespace detail {

// Fornberg weights for derivatives 0..m at x0 from nodes xs.
// w[d][i] multiplies f(xs[i]) in the d-th derivative.
inline std::vector<std::vector<double>> fornberg_weights(double x0,
                                                         std::span<const double> xs, int m) {
    const int n = int(xs.size()) - 1;
    std::vector<std::vector<std::vector<double>>> d(
        size_t(m + 1), std::vector<std::vector<double>>(size_t(n + 1),
                                                        std::vector<double>(size_t(n + 1), 0.0)));
    d[0][0][0] = 1.0;
    double c1 = 1.0;
    for (int i = 1; i <= n; ++i) {
        double c2 = 1.0;
        for (int j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            for (int k = 0; k <= std::min(i, m); ++k) {
                d[k][i][j] = ((xs[i] - x0) * d[k][i - 1][j] -
                              (k > 0 ? double(k) * d[k - 1][i - 1][j] : 0.0)) /
                             c3;
            }
        }
        for (int k = 0; k <= std::min(i, m); ++k) {
            d[k][i][i] = (c1 / c2) * ((k > 0 ? double(k) * d[k - 1][i - 1][i - 1] : 0.0) -
                                      (xs[i - 1] - x0) * d[k][i - 1][i - 1]);
        }
        c1 = c2;
    }
    std::vector<std::vector<double>> w(size_t(m + 1), std::vector<double>(size_t(n + 1)));
    for (int k = 0; k <= m; ++k)
        for (int i = 0; i <= n; ++i) w[k][i] = d[k][n][i];
    return w;
}

}  // namespace detail

// Reduced parameters and their jets along a configured path.
class PathInstance {
  public:
    explicit PathInstance(PathConfig cfg) : cfg_(std::move(cfg)) { validate(cfg_); }

    const PathConfig& config() const { return cfg_; }
    double period() const { return cfg_.T; }
    double total_time() const { return cfg_.total_time(); }

    // Jets of (omega, gamma, g) about base point t.  S is double for
    // real time or Complex for complex-time continuation.
    template <class S, int N>
    struct ParamJets {
        Jet<S, N> omega, gamma, g;
    };

    template <class S, int N>
    ParamJets<S, N> eval(const S& t) const {
        if (cfg_.kind == PathKind::Sampled) {
            if constexpr (std::is_same_v<S, double>) {
                return sampled_eval<N>(t);
            } else {
                throw InvalidConfig("sampled paths do not extend to complex time");
            }
        }
        ParamJets<S, N> out;
        out.gamma = Jet<S, N>(S(cfg_.gamma));
        const S rate = S(cfg_.direction * 2.0 * pi / cfg_.T);
        Jet<S, N> phi = Jet<S, N>::variable(t) * rate + S(cfg_.phi0);
        Jet<S, N> sphi, cphi;
        sincos_jet(phi, sphi, cphi);
        const S half_gamma = S(0.5 * cfg_.gamma);
        switch (cfg_.kind) {
            case PathKind::Circular:
                out.omega = sphi * S(cfg_.r);
                out.g = cphi * S(cfg_.r) + half_gamma;
                break;
            case PathKind::DisplacedCircular:
                out.omega = sphi * S(cfg_.r);
                out.g = cphi * S(cfg_.r) + (half_gamma + S(cfg_.g_offset));
                break;
            case PathKind::TiltedEllipse: {
                Jet<S, N> sp, cp;
                sincos_jet(phi + S(cfg_.theta_aa), sp, cp);
                Jet<S, N> rt = S(cfg_.r * (1.0 - cfg_.e * cfg_.e)) *
                               reciprocal(cp * S(cfg_.e) + S(1.0));
                out.omega = rt * sphi;
                out.g = rt * cphi + half_gamma;
                break;
            }
            case PathKind::LinearOscillation:
                out.omega = -(sphi * S(cfg_.L));
                out.g = Jet<S, N>(half_gamma + S(cfg_.g_offset));
                break;
            case PathKind::Sampled:
                break;  // handled above
        }
        return out;
    }

    ReducedParams at(double t) const {
        auto j = eval<double, 0>(t);
        ReducedParams p;
        p.omega = j.omega.value();
        p.gamma = j.gamma.value();
        p.g = j.g.value();
        return p;
    }

    // First derivatives, used by the derivative-consistency checks.
    ReducedParams derivative_at(double t) const {
        auto j = eval<double, 1>(t);
        ReducedParams p;
        p.omega = j.omega.derivative(1);
        p.gamma = j.gamma.derivative(1);
        p.g = j.g.derivative(1);
        return p;
    }

    bool supports_complex_time() const { return cfg_.kind != PathKind::Sampled; }

  private:
    template <int N>
    ParamJets<double, N> sampled_eval(double t) const {
        const auto& s = cfg_.samples;
        // five nearest nodes around t
        auto it = std::lower_bound(s.begin(), s.end(), t,
                                   [](const PathSample& a, double x) { return a.t < x; });
        long idx = it - s.begin();
        long lo = std::clamp<long>(idx - 2, 0, long(s.size()) - 5);
        std::array<double, 5> xs;
        for (int i = 0; i < 5; ++i) xs[i] = s[size_t(lo + i)].t;
        const int m = std::min(N, 4);
        auto w = detail::fornberg_weights(t, std::span<const double>(xs.data(), 5), m);
        ParamJets<double, N> out;
        double fact = 1.0;
        for (int d = 0; d <= N; ++d) {
            if (d > 1) fact *= double(d);
            if (d > m) break;
            double so = 0, sg = 0, sc = 0;
            for (int i = 0; i < 5; ++i) {
                const auto& p = s[size_t(lo + i)];
                so += w[size_t(d)][size_t(i)] * p.omega;
                sg += w[size_t(d)][size_t(i)] * p.gamma;
                sc += w[size_t(d)][size_t(i)] * p.g;
            }
            out.omega.c[size_t(d)] = so / fact;
            out.gamma.c[size_t(d)] = sg / fact;
            out.g.c[size_t(d)] = sc / fact;
        }
        return out;
    }

    PathConfig cfg_;
};

inline PathInstance make_path(const PathConfig& cfg) { return PathInstance(cfg); }

}  // namespace epdyn

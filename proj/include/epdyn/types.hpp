#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace epdyn {

using Complex = std::complex<double>;
using Vec2 = std::array<Complex, 2>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr Complex I{0.0, 1.0};

// 2x2 complex matrix, row-major.  Entry names follow the eigenbasis
// ordering (minus, plus): m(0,0) = M--, m(0,1) = M-+, etc.
struct Mat2 {
    std::array<Complex, 4> a{};

    Complex& operator()(int r, int c) { return a[2 * r + c]; }
    const Complex& operator()(int r, int c) const { return a[2 * r + c]; }

    static Mat2 identity() { return Mat2{{Complex(1), Complex(0), Complex(0), Complex(1)}}; }

    Complex det() const { return a[0] * a[3] - a[1] * a[2]; }

    Vec2 apply(const Vec2& v) const {
        return {a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]};
    }

    Mat2 operator*(const Mat2& o) const {
        Mat2 r;
        r.a[0] = a[0] * o.a[0] + a[1] * o.a[2];
        r.a[1] = a[0] * o.a[1] + a[1] * o.a[3];
        r.a[2] = a[2] * o.a[0] + a[3] * o.a[2];
        r.a[3] = a[2] * o.a[1] + a[3] * o.a[3];
        return r;
    }
};

inline double max_abs(const Mat2& m) {
    double v = 0;
    for (const auto& x : m.a) v = std::max(v, std::abs(x));
    return v;
}

// Error taxonomy.  Hard failures throw; recoverable conditions are
// reported through status flags on result structs.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct AtExceptionalPoint : Error {
    explicit AtExceptionalPoint(const std::string& m) : Error(m) {}
};
struct TangentCrossing : Error {
    explicit TangentCrossing(const std::string& m) : Error(m) {}
};
struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& m) : Error(m) {}
};
struct DivisionNearZero : Error {
    explicit DivisionNearZero(const std::string& m) : Error(m) {}
};
struct StepSizeUnderflow : Error {
    explicit StepSizeUnderflow(const std::string& m) : Error(m) {}
};
struct OverflowError : Error {
    explicit OverflowError(const std::string& m) : Error(m) {}
};
struct SeriesDiverged : Error {
    explicit SeriesDiverged(const std::string& m) : Error(m) {}
};
struct PoleAtInput : Error {
    explicit PoleAtInput(const std::string& m) : Error(m) {}
};
struct SpecialFunctionDomain : Error {
    explicit SpecialFunctionDomain(const std::string& m) : Error(m) {}
};
struct RootNotFound : Error {
    explicit RootNotFound(const std::string& m) : Error(m) {}
};
struct CurveEscaped : Error {
    explicit CurveEscaped(const std::string& m) : Error(m) {}
};
struct StepTooLarge : Error {
    explicit StepTooLarge(const std::string& m) : Error(m) {}
};
struct DegenerateCoupling : Error {
    explicit DegenerateCoupling(const std::string& m) : Error(m) {}
};

inline bool finite(double x) { return std::isfinite(x); }
inline bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace epdyn

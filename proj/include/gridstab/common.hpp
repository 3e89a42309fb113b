#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gridstab {

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes: parse/validation/usage
// errors exit with 1, numerical failures with 2.
// ---------------------------------------------------------------------------

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Forward-mode scalar for algorithmic differentiation. Carries one derivative
// direction; Jacobians are built column by column by seeding `d`.
// ---------------------------------------------------------------------------

struct Dual {
    double v = 0.0;  // value
    double d = 0.0;  // derivative along the seeded direction

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT: implicit by design
    Dual(double value, double deriv) : v(value), d(deriv) {}

    Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
    Dual& operator/=(const Dual& o) { d = (d * o.v - v * o.d) / (o.v * o.v); v /= o.v; return *this; }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator+(const Dual& a) { return a; }

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
inline bool operator==(const Dual& a, const Dual& b) { return a.v == b.v; }

inline Dual sin(const Dual& a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(const Dual& a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual exp(const Dual& a) { double e = std::exp(a.v); return {e, e * a.d}; }
inline Dual sqrt(const Dual& a) {
    double s = std::sqrt(a.v);
    return {s, s > 0.0 ? a.d / (2.0 * s) : 0.0};
}
inline Dual atan2(const Dual& y, const Dual& x) {
    double r2 = x.v * x.v + y.v * y.v;
    return {std::atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / r2};
}
inline Dual abs(const Dual& a) { return a.v < 0.0 ? -a : a; }

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

// ---------------------------------------------------------------------------
// Planar vector in a rotating dq frame. Component order is (d, q). The matrix
// J = R(pi/2) plays the role of the imaginary unit: J*x rotates x a quarter
// turn, so series impedance r + J*w*l acts like the familiar r + jwl.
// ---------------------------------------------------------------------------

template <class S>
struct Vec2 {
    S d{};
    S q{};

    Vec2() = default;
    Vec2(S d_, S q_) : d(d_), q(q_) {}

    Vec2& operator+=(const Vec2& o) { d += o.d; q += o.q; return *this; }
    Vec2& operator-=(const Vec2& o) { d -= o.d; q -= o.q; return *this; }
};

template <class S> Vec2<S> operator+(Vec2<S> a, const Vec2<S>& b) { return a += b; }
template <class S> Vec2<S> operator-(Vec2<S> a, const Vec2<S>& b) { return a -= b; }
template <class S> Vec2<S> operator-(const Vec2<S>& a) { return {-a.d, -a.q}; }
template <class S> Vec2<S> operator*(const S& s, const Vec2<S>& a) { return {s * a.d, s * a.q}; }
template <class S> Vec2<S> operator*(const Vec2<S>& a, const S& s) { return {a.d * s, a.q * s}; }
template <class S> Vec2<S> operator/(const Vec2<S>& a, const S& s) { return {a.d / s, a.q / s}; }

// Mixed double * Vec2<Dual> convenience (parameters are plain doubles).
inline Vec2<Dual> operator*(double s, const Vec2<Dual>& a) { return {Dual(s) * a.d, Dual(s) * a.q}; }
inline Vec2<Dual> operator*(const Vec2<Dual>& a, double s) { return {a.d * Dual(s), a.q * Dual(s)}; }
inline Vec2<Dual> operator/(const Vec2<Dual>& a, double s) { return {a.d / Dual(s), a.q / Dual(s)}; }

template <class S> S dot(const Vec2<S>& a, const Vec2<S>& b) { return a.d * b.d + a.q * b.q; }

// J * x  with J = R(pi/2)
template <class S> Vec2<S> jmul(const Vec2<S>& x) { return {-x.q, x.d}; }

// v^T J^T i, the reactive bilinear form paired with p = v^T i.
template <class S> S jform(const Vec2<S>& v, const Vec2<S>& i) { return v.d * i.q - v.q * i.d; }

template <class S> S norm(const Vec2<S>& a) { using std::sqrt; using gridstab::sqrt; return sqrt(dot(a, a)); }

// R(theta) * x
template <class S> Vec2<S> rotate(const S& theta, const Vec2<S>& x) {
    using std::sin; using std::cos; using gridstab::sin; using gridstab::cos;
    S c = cos(theta), s = sin(theta);
    return {c * x.d - s * x.q, s * x.d + c * x.q};
}

using Vec2d = Vec2<double>;

constexpr double kPi = 3.14159265358979323846;

// FNV-1a, used for config/provenance hashes in output files.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace gridstab

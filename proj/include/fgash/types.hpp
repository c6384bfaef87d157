#ifndef FGASH_TYPES_HPP
#define FGASH_TYPES_HPP

#include <complex>
#include <cmath>

namespace fgash {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

/** Value of a scalar function together with its first two derivatives. */
struct Jet2 {
    double v  = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/** Product rule for jets: (fg), (fg)' = f'g + fg', (fg)'' = f''g + 2f'g' + fg''. */
inline Jet2 jet_mul(const Jet2& f, const Jet2& g) {
    Jet2 h;
    h.v  = f.v * g.v;
    h.d1 = f.d1 * g.v + f.v * g.d1;
    h.d2 = f.d2 * g.v + 2.0 * f.d1 * g.d1 + f.v * g.d2;
    return h;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::sqrt(dot(a, a)); }

/** 2x2 real symmetric matrix stored as [[m00, m01], [m01, m11]]. */
struct SymMat2 {
    double m00 = 0.0;
    double m01 = 0.0;
    double m11 = 0.0;
};

inline Vec2 apply(const SymMat2& m, const Vec2& v) {
    return {m.m00 * v.x + m.m01 * v.y, m.m01 * v.x + m.m11 * v.y};
}

} // namespace fgash

#endif

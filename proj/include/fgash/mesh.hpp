#ifndef FGASH_MESH_HPP
#define FGASH_MESH_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "fgash/errors.hpp"
#include "fgash/types.hpp"

namespace fgash {

/**
 * Rectangular phase-space grid K = [q_min,q_max] x [p_min,p_max], endpoints
 * included, uniform node weight dq*dp.  Node (i,j) sits at
 * (q_min + i*dq, p_min + j*dp), flattened index i*np + j.
 */
struct PhaseSpaceMesh {
    double q_min = 0.0, q_max = 0.0;
    double p_min = 0.0, p_max = 0.0;
    double dq = 0.0, dp = 0.0;
    int nq = 0, np = 0;

    static PhaseSpaceMesh make(double q_min, double q_max, double dq,
                               double p_min, double p_max, double dp) {
        detail::require<ConfigError>(dq > 0.0 && dp > 0.0, "mesh spacings must be positive");
        detail::require<ConfigError>(q_max > q_min && p_max > p_min, "mesh box is empty");
        PhaseSpaceMesh m;
        m.q_min = q_min; m.q_max = q_max; m.dq = dq;
        m.p_min = p_min; m.p_max = p_max; m.dp = dp;
        m.nq = static_cast<int>(std::lround((q_max - q_min) / dq)) + 1;
        m.np = static_cast<int>(std::lround((p_max - p_min) / dp)) + 1;
        detail::require<ConfigError>(m.nq >= 2 && m.np >= 2, "mesh needs at least 2x2 nodes");
        return m;
    }

    double q(int i) const { return q_min + i * dq; }
    double p(int j) const { return p_min + j * dp; }
    std::size_t size() const { return static_cast<std::size_t>(nq) * np; }
    double cell_weight() const { return dq * dp; }
    double p_abs_max() const { return std::max(std::fabs(p_min), std::fabs(p_max)); }

    bool operator==(const PhaseSpaceMesh& o) const {
        return q_min == o.q_min && q_max == o.q_max && p_min == o.p_min &&
               p_max == o.p_max && dq == o.dq && dp == o.dp && nq == o.nq && np == o.np;
    }
};

/**
 * Uniform spatial grid on a periodic box [x_min, x_max): n nodes at
 * x_min + j*dx, the right endpoint identified with the left one.  Integrals
 * are plain node sums times dx, which is the trapezoid rule on a periodic
 * grid.
 */
struct XMesh {
    double x_min = 0.0;
    double dx = 0.0;
    int n = 0;

    static XMesh make(double x_min, double x_max, double dx) {
        detail::require<ConfigError>(dx > 0.0 && x_max > x_min, "bad spatial mesh");
        XMesh m;
        m.x_min = x_min;
        m.dx = dx;
        double len = x_max - x_min;
        m.n = static_cast<int>(std::lround(len / dx));
        detail::require<ConfigError>(std::fabs(m.n * dx - len) <= 1e-9 * len,
                                     "dx must divide the box length");
        detail::require<ConfigError>(m.n >= 8, "spatial mesh too small");
        return m;
    }

    double x(int j) const { return x_min + j * dx; }
    double length() const { return n * dx; }

    bool operator==(const XMesh& o) const {
        return x_min == o.x_min && dx == o.dx && n == o.n;
    }
};

namespace detail {

/** Number of fixed steps covering [t_from, t_to]; dt must divide the span. */
inline int step_count(double t_from, double t_to, double dt) {
    const double span = t_to - t_from;
    require<ConfigError>(dt > 0.0 && span >= 0.0, "bad evolution horizon");
    const long long n = std::llround(span / dt);
    require<ConfigError>(std::fabs(n * dt - span) <= 1e-9 * std::max(1.0, span),
                         "dt must divide the evolution horizon");
    return static_cast<int>(n);
}

} // namespace detail

/** Two-component wavefunction on an XMesh, adiabatic ordering (0 = lower). */
struct WaveField {
    XMesh mesh;
    double eps = 0.0;
    std::vector<cplx> u0, u1;

    static WaveField zeros(const XMesh& mesh, double eps) {
        WaveField f;
        f.mesh = mesh;
        f.eps = eps;
        f.u0.assign(static_cast<std::size_t>(mesh.n), cplx(0.0, 0.0));
        f.u1.assign(static_cast<std::size_t>(mesh.n), cplx(0.0, 0.0));
        return f;
    }

    double norm2_u0() const { return comp_norm2(u0); }
    double norm2_u1() const { return comp_norm2(u1); }
    double norm2_total() const { return norm2_u0() + norm2_u1(); }

private:
    double comp_norm2(const std::vector<cplx>& u) const {
        double s = 0.0;
        for (const cplx& v : u) s += std::norm(v);
        return s * mesh.dx;
    }
};

/** Same layout in the fixed diabatic frame (components of the C^2 vector). */
struct DiabaticField {
    XMesh mesh;
    double eps = 0.0;
    std::vector<cplx> v0, v1;

    static DiabaticField zeros(const XMesh& mesh, double eps) {
        DiabaticField f;
        f.mesh = mesh;
        f.eps = eps;
        f.v0.assign(static_cast<std::size_t>(mesh.n), cplx(0.0, 0.0));
        f.v1.assign(static_cast<std::size_t>(mesh.n), cplx(0.0, 0.0));
        return f;
    }

    double norm2_total() const {
        double s = 0.0;
        for (const cplx& v : v0) s += std::norm(v);
        for (const cplx& v : v1) s += std::norm(v);
        return s * mesh.dx;
    }
};

} // namespace fgash

#endif

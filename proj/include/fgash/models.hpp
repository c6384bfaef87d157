#ifndef FGASH_MODELS_HPP
#define FGASH_MODELS_HPP

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "fgash/errors.hpp"
#include "fgash/types.hpp"

namespace fgash {

enum class ModelKind {
    SimpleAvoided,
    DualAvoided,
    ExtendedCoupling,
    Conical,
    FixedGapLinear,
};

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::SimpleAvoided:    return "SimpleAvoided";
        case ModelKind::DualAvoided:      return "DualAvoided";
        case ModelKind::ExtendedCoupling: return "ExtendedCoupling";
        case ModelKind::Conical:          return "Conical";
        case ModelKind::FixedGapLinear:   return "FixedGapLinear";
    }
    return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "SimpleAvoided")    return ModelKind::SimpleAvoided;
    if (s == "DualAvoided")      return ModelKind::DualAvoided;
    if (s == "ExtendedCoupling") return ModelKind::ExtendedCoupling;
    if (s == "Conical")          return ModelKind::Conical;
    if (s == "FixedGapLinear")   return ModelKind::FixedGapLinear;
    throw ConfigError("unknown model: " + s);
}

/** Diabatic matrix written as H(x) = [[c+a, b], [b, c-a]] with x-jets. */
struct DiabaticJets {
    Jet2 a, b, c;
};

/** What the trajectory integrator needs on one surface at one point. */
struct SurfaceFlow {
    double E   = 0.0;
    double dE  = 0.0;
    double ddE = 0.0;
};

/** Off-diagonal derivative coupling in the smooth real gauge (d10 = -d01). */
struct CouplingData {
    double d01 = 0.0;
    double gap = 0.0;
};

/** Full pointwise eigen-decomposition of the 2x2 symmetric matrix. */
struct AdiabaticData {
    double E0 = 0.0, E1 = 0.0;
    double dE0 = 0.0, dE1 = 0.0;
    double ddE0 = 0.0, ddE1 = 0.0;
    double gap = 0.0;
    double d01 = 0.0, d10 = 0.0, d00 = 0.0, d11 = 0.0;
    double D01 = 0.0, D10 = 0.0, D00 = 0.0, D11 = 0.0;
    Vec2 psi0, psi1;
};

/** First and second derivative couplings from centered differences. */
struct CouplingOracle {
    double d01 = 0.0, d10 = 0.0, d00 = 0.0, d11 = 0.0;
    double D01 = 0.0, D10 = 0.0, D00 = 0.0, D11 = 0.0;
};

namespace detail {

inline constexpr double gap_floor = 1e-12;

/**
 * Radial part r = sqrt(a^2+b^2) of the traceless block and its derivatives.
 * The eigenvalues are c -+ r, so 2r is the gap.
 */
struct RadialJets {
    double r, dr, ddr;
};

inline RadialJets radial(const DiabaticJets& j) {
    const double r2 = j.a.v * j.a.v + j.b.v * j.b.v;
    const double r = std::sqrt(r2);
    require<DegenerateGap>(2.0 * r >= gap_floor, "eigenvalue gap below resolvable threshold");
    const double dr = (j.a.v * j.a.d1 + j.b.v * j.b.d1) / r;
    const double ddr = (j.a.d1 * j.a.d1 + j.b.d1 * j.b.d1 +
                        j.a.v * j.a.d2 + j.b.v * j.b.d2 - dr * dr) / r;
    return {r, dr, ddr};
}

/**
 * Mixing angle phi = atan2(b, a) jets.  In the rotation gauge
 * psi1 = (cos(phi/2), sin(phi/2)), psi0 = (sin(phi/2), -cos(phi/2)) the
 * couplings reduce to d01 = -phi'/2 and D01 = -phi''/2; these follow from
 * psi1' = -(phi'/2) psi0 and psi0' = (phi'/2) psi1.
 */
struct AngleJets {
    double phi, dphi, ddphi;
};

inline AngleJets angle(const DiabaticJets& j, const RadialJets& rj) {
    const double r2 = rj.r * rj.r;
    const double phi = std::atan2(j.b.v, j.a.v);
    const double dphi = (j.b.d1 * j.a.v - j.a.d1 * j.b.v) / r2;
    const double ddphi = (j.b.d2 * j.a.v - j.a.d2 * j.b.v) / r2 -
                         2.0 * dphi * rj.dr / rj.r;
    return {phi, dphi, ddphi};
}

} // namespace detail

/** Adiabatic surface data E = c -+ r derived from the diabatic entry jets. */
inline SurfaceFlow flow_from_jets(const DiabaticJets& j, int surface) {
    const detail::RadialJets rj = detail::radial(j);
    const double s = surface == 0 ? -1.0 : 1.0;
    return {j.c.v + s * rj.r, j.c.d1 + s * rj.dr, j.c.d2 + s * rj.ddr};
}

/** Off-diagonal coupling d01 = -phi'/2 and gap derived from the entry jets. */
inline CouplingData coupling_from_jets(const DiabaticJets& j) {
    const detail::RadialJets rj = detail::radial(j);
    const detail::AngleJets aj = detail::angle(j, rj);
    return {-0.5 * aj.dphi, 2.0 * rj.r};
}

/**
 * The built-in family of two-level potentials.  Each one is specified by the
 * jets of the diabatic entries; everything adiabatic is derived generically.
 * The avoided-crossing models share the product structure H = F(x) * M(x)
 * with a scalar modulation F > 0 carrying the delta dependence, so their
 * derivative couplings are independent of delta (F cancels in the mixing
 * angle).
 */
class ModelPotential {
public:
    ModelPotential(ModelKind kind, double delta) : kind_(kind), delta_(delta) {
        detail::require<ConfigError>(delta > 0.0 || kind == ModelKind::FixedGapLinear,
                                     "delta must be positive");
    }

    ModelKind kind() const { return kind_; }
    double delta() const { return delta_; }

    DiabaticJets diabatic(double x) const {
        switch (kind_) {
            case ModelKind::SimpleAvoided:    return simple_avoided(x);
            case ModelKind::DualAvoided:      return dual_avoided(x);
            case ModelKind::ExtendedCoupling: return extended_coupling(x);
            case ModelKind::Conical:          return conical(x);
            case ModelKind::FixedGapLinear:   return fixed_gap_linear(x);
        }
        return {};
    }

    SymMat2 hamiltonian(double x) const {
        const DiabaticJets j = diabatic(x);
        return {j.c.v + j.a.v, j.b.v, j.c.v - j.a.v};
    }

    SurfaceFlow flow(int surface, double x) const {
        return flow_from_jets(diabatic(x), surface);
    }

    CouplingData coupling(double x) const {
        return coupling_from_jets(diabatic(x));
    }

private:
    ModelKind kind_;
    double delta_;

    static Jet2 constant(double v) { return {v, 0.0, 0.0}; }

    DiabaticJets simple_avoided(double x) const {
        const double t = std::tanh(x);
        const double sech2 = 1.0 - t * t;
        const Jet2 a_m{t / (2.0 * pi), sech2 / (2.0 * pi), -2.0 * t * sech2 / (2.0 * pi)};
        const Jet2 b_m = constant(0.1);
        const Jet2 f = bump_scale(x);
        return {jet_mul(f, a_m), jet_mul(f, b_m), constant(0.0)};
    }

    /** F = 1 + (delta-1) e^{-10 x^2}: equals delta at the crossing, 1 far away. */
    Jet2 bump_scale(double x) const {
        const double g = std::exp(-10.0 * x * x);
        const double w = delta_ - 1.0;
        return {1.0 + w * g, w * (-20.0 * x) * g, w * (400.0 * x * x - 20.0) * g};
    }

    DiabaticJets dual_avoided(double x) const {
        const double g = std::exp(-x * x / 10.0);
        const double dg = -(x / 5.0) * g;
        const double ddg = (x * x / 25.0 - 0.2) * g;
        const Jet2 a_m{0.5 * g - 0.25, 0.5 * dg, 0.5 * ddg};
        const Jet2 b_m = constant(0.05);
        const Jet2 c_m{0.25 - 0.5 * g, -0.5 * dg, -0.5 * ddg};
        const Jet2 f = twin_bump_scale(x);
        return {jet_mul(f, a_m), jet_mul(f, b_m), jet_mul(f, c_m)};
    }

    /**
     * Two unit-width wells centered on the avoided crossings at
     * +-sqrt(10 ln 2); there F = delta * (1 + 2^{-40}) and far away F -> 1.
     */
    Jet2 twin_bump_scale(double x) const {
        const double s = std::sqrt(10.0 * std::log(2.0));
        const double w = delta_ - 1.0;
        const double up = x - s, um = x + s;
        const double gp = std::exp(-up * up), gm = std::exp(-um * um);
        Jet2 f;
        f.v  = 1.0 + 0x1.0p-40 + w * (gp + gm);
        f.d1 = w * (-2.0 * up * gp - 2.0 * um * gm);
        f.d2 = w * ((4.0 * up * up - 2.0) * gp + (4.0 * um * um - 2.0) * gm);
        return f;
    }

    DiabaticJets extended_coupling(double x) const {
        const Jet2 a_m = constant(0.05);
        const double den = 1.0 + 4.0 * x * x;
        const Jet2 b_m{(std::atan(2.0 * x) + 0.5 * pi) / 10.0,
                       1.0 / (5.0 * den),
                       -8.0 * x / (5.0 * den * den)};
        const Jet2 f = switch_scale(x);
        return {jet_mul(f, a_m), jet_mul(f, b_m), constant(0.0)};
    }

    /** F = (arctan(100 x) + pi/2 + delta)/pi: steep step from delta/pi to 1 + delta/pi. */
    Jet2 switch_scale(double x) const {
        const double den = 1.0 + 1e4 * x * x;
        return {(std::atan(100.0 * x) + 0.5 * pi + delta_) / pi,
                100.0 / (pi * den),
                -2e6 * x / (pi * den * den)};
    }

    DiabaticJets conical(double x) const {
        return {{x, 1.0, 0.0}, constant(delta_), constant(0.0)};
    }

    DiabaticJets fixed_gap_linear(double x) const {
        return {{x / 5.0, 0.2, 0.0}, constant(0.1), constant(0.0)};
    }
};

inline double canonical_sign(const Vec2& v) {
    const double lead = std::fabs(v.x) > 1e-14 ? v.x : v.y;
    return lead >= 0.0 ? 1.0 : -1.0;
}

/**
 * Eigen-decomposition with explicit gauge control.  Without an anchor the
 * sign convention is canonical: the first nonzero component of each
 * eigenvector is positive.  With an anchor each eigenvector is flipped to
 * have nonnegative overlap with the anchored one, which yields a continuous
 * gauge along a sweep.  Couplings are transformed consistently with the
 * flips.
 */
inline AdiabaticData adiabatic_decompose(
    const DiabaticJets& j,
    const std::optional<std::pair<Vec2, Vec2>>& gauge_anchor = std::nullopt) {
    const detail::RadialJets rj = detail::radial(j);
    const detail::AngleJets aj = detail::angle(j, rj);

    AdiabaticData out;
    out.E0 = j.c.v - rj.r;
    out.E1 = j.c.v + rj.r;
    out.dE0 = j.c.d1 - rj.dr;
    out.dE1 = j.c.d1 + rj.dr;
    out.ddE0 = j.c.d2 - rj.ddr;
    out.ddE1 = j.c.d2 + rj.ddr;
    out.gap = 2.0 * rj.r;

    const double half = 0.5 * aj.phi;
    Vec2 psi1{std::cos(half), std::sin(half)};
    Vec2 psi0{std::sin(half), -std::cos(half)};

    double s0 = 1.0, s1 = 1.0;
    if (gauge_anchor) {
        if (dot(psi0, gauge_anchor->first) < 0.0) s0 = -1.0;
        if (dot(psi1, gauge_anchor->second) < 0.0) s1 = -1.0;
    } else {
        s0 = canonical_sign(psi0);
        s1 = canonical_sign(psi1);
    }
    out.psi0 = {s0 * psi0.x, s0 * psi0.y};
    out.psi1 = {s1 * psi1.x, s1 * psi1.y};

    const double cross = s0 * s1;
    out.d01 = cross * (-0.5 * aj.dphi);
    out.d10 = -out.d01;
    out.d00 = 0.0;
    out.d11 = 0.0;
    out.D01 = cross * (-0.5 * aj.ddphi);
    out.D10 = -out.D01;
    out.D00 = -0.25 * aj.dphi * aj.dphi;
    out.D11 = out.D00;
    return out;
}

inline AdiabaticData adiabatic_decompose(
    const ModelPotential& model, double x,
    const std::optional<std::pair<Vec2, Vec2>>& gauge_anchor = std::nullopt) {
    return adiabatic_decompose(model.diabatic(x), gauge_anchor);
}

/**
 * Independent check of the derivative couplings: centered differences of the
 * gauge-fixed eigenvectors, each neighbor anchored to the center point.
 * First differences are accurate near h = 1e-5; second differences need a
 * larger h to balance truncation against round-off cancellation.
 */
template <class Model>
CouplingOracle fd_coupling_oracle(const Model& model, double x, double h) {
    detail::require<ConfigError>(h > 0.0, "fd step must be positive");
    const AdiabaticData c = adiabatic_decompose(model.diabatic(x));
    const auto anchor = std::make_optional(std::make_pair(c.psi0, c.psi1));
    const AdiabaticData p = adiabatic_decompose(model.diabatic(x + h), anchor);
    const AdiabaticData m = adiabatic_decompose(model.diabatic(x - h), anchor);

    const auto diff1 = [h](const Vec2& fp, const Vec2& fm) {
        return Vec2{(fp.x - fm.x) / (2.0 * h), (fp.y - fm.y) / (2.0 * h)};
    };
    const auto diff2 = [h](const Vec2& fp, const Vec2& f0, const Vec2& fm) {
        return Vec2{(fp.x - 2.0 * f0.x + fm.x) / (h * h),
                    (fp.y - 2.0 * f0.y + fm.y) / (h * h)};
    };

    const Vec2 dpsi0 = diff1(p.psi0, m.psi0), dpsi1 = diff1(p.psi1, m.psi1);
    const Vec2 ddpsi0 = diff2(p.psi0, c.psi0, m.psi0), ddpsi1 = diff2(p.psi1, c.psi1, m.psi1);

    CouplingOracle out;
    out.d01 = dot(c.psi0, dpsi1);
    out.d10 = dot(c.psi1, dpsi0);
    out.d00 = dot(c.psi0, dpsi0);
    out.d11 = dot(c.psi1, dpsi1);
    out.D01 = dot(c.psi0, ddpsi1);
    out.D10 = dot(c.psi1, ddpsi0);
    out.D00 = dot(c.psi0, ddpsi0);
    out.D11 = dot(c.psi1, ddpsi1);
    return out;
}

} // namespace fgash

#endif

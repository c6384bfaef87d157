#ifndef FGASH_TRAJECTORY_HPP
#define FGASH_TRAJECTORY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fgash/errors.hpp"
#include "fgash/mesh.hpp"
#include "fgash/models.hpp"
#include "fgash/rng.hpp"
#include "fgash/types.hpp"

namespace fgash {

/**
 * One stochastic beam.  (Q,P) is the phase-space center, S the classical
 * action, A the complex beam amplitude, J the flow Jacobian
 * [[dQ/dq, dQ/dp], [dP/dq, dP/dp]] propagated alongside to supply the width
 * parameter Z = tr(dQ/dz) + i tr(dP/dz) with dz = d/dq - i d/dp.  hop_phase
 * collects one unit factor tau/|tau| per hop and log_weight the integrated
 * hopping intensity that compensates the survival bias of the jump process.
 */
struct TrajectoryState {
    double t = 0.0;
    int surface = 0;
    double Q = 0.0;
    double P = 0.0;
    double S = 0.0;
    cplx A{1.0, 0.0};
    std::array<double, 4> J{1.0, 0.0, 0.0, 1.0};
    cplx hop_phase{1.0, 0.0};
    double log_weight = 0.0;
    std::vector<double> hop_times;
    std::uint64_t rng_stream = 0;
};

struct TrajectoryDeriv {
    double dQ = 0.0, dP = 0.0, dS = 0.0;
    cplx dA{0.0, 0.0};
    std::array<double, 4> dJ{0.0, 0.0, 0.0, 0.0};
};

/** Width parameter; invertible along exact flows, guarded anyway. */
inline cplx width_parameter(const TrajectoryState& s) {
    return {s.J[0] + s.J[3], s.J[2] - s.J[1]};
}

/** |det J - 1|: how far the propagated Jacobian drifted off the symplectic group. */
inline double symplectic_defect(const TrajectoryState& s) {
    return std::fabs(s.J[0] * s.J[3] - s.J[1] * s.J[2] - 1.0);
}

/**
 * Right-hand side of the beam motion on the current surface:
 *
 *   Q' = P,  P' = -E'(Q),  S' = |P|^2/2 - E(Q),
 *   J' = [[0, I], [-E''(Q), 0]] J,
 *   A' = (A/2) tr(Z^{-1} (dzP - i dzQ E''(Q))) - A (d_ll . P).
 *
 * The diagonal coupling d_ll vanishes identically in the smooth real gauge
 * used here; the term is kept explicit so the formula stays complete.
 */
template <class Model>
TrajectoryDeriv time_derivative(const Model& model, const TrajectoryState& s) {
    const SurfaceFlow f = model.flow(s.surface, s.Q);

    const cplx Z = width_parameter(s);
    detail::require<IllConditionedZ>(std::abs(Z) > 1e-12,
                                     "width parameter Z lost invertibility");
    const cplx dzQ{s.J[0], -s.J[1]};
    const cplx dzP{s.J[2], -s.J[3]};

    TrajectoryDeriv d;
    d.dQ = s.P;
    d.dP = -f.dE;
    d.dS = 0.5 * s.P * s.P - f.E;
    d.dJ = {s.J[2], s.J[3], -f.ddE * s.J[0], -f.ddE * s.J[1]};

    const double d_ll = 0.0;
    d.dA = 0.5 * s.A * (dzP - cplx(0.0, 1.0) * dzQ * f.ddE) / Z - s.A * (d_ll * s.P);
    return d;
}

namespace detail {

/** The continuously evolving part of the state, for stage arithmetic. */
struct FlowCore {
    double Q, P, S;
    cplx A;
    std::array<double, 4> J;
};

inline FlowCore core_of(const TrajectoryState& s) {
    return {s.Q, s.P, s.S, s.A, s.J};
}

inline void shift(TrajectoryState& s, const FlowCore& base,
                  const TrajectoryDeriv& d, double h) {
    s.Q = base.Q + h * d.dQ;
    s.P = base.P + h * d.dP;
    s.S = base.S + h * d.dS;
    s.A = base.A + h * d.dA;
    for (int i = 0; i < 4; ++i) s.J[i] = base.J[i] + h * d.dJ[i];
}

} // namespace detail

/** Classical fourth-order Runge-Kutta step of the continuous beam variables. */
template <class Model>
void rk4_step(const Model& model, TrajectoryState& s, double dt) {
    const detail::FlowCore base = detail::core_of(s);
    const TrajectoryDeriv k1 = time_derivative(model, s);
    detail::shift(s, base, k1, 0.5 * dt);
    const TrajectoryDeriv k2 = time_derivative(model, s);
    detail::shift(s, base, k2, 0.5 * dt);
    const TrajectoryDeriv k3 = time_derivative(model, s);
    detail::shift(s, base, k3, dt);
    const TrajectoryDeriv k4 = time_derivative(model, s);

    const double w = dt / 6.0;
    s.Q = base.Q + w * (k1.dQ + 2.0 * k2.dQ + 2.0 * k3.dQ + k4.dQ);
    s.P = base.P + w * (k1.dP + 2.0 * k2.dP + 2.0 * k3.dP + k4.dP);
    s.S = base.S + w * (k1.dS + 2.0 * k2.dS + 2.0 * k3.dS + k4.dS);
    s.A = base.A + w * (k1.dA + 2.0 * k2.dA + 2.0 * k3.dA + k4.dA);
    for (int i = 0; i < 4; ++i)
        s.J[i] = base.J[i] + w * (k1.dJ[i] + 2.0 * k2.dJ[i] + 2.0 * k3.dJ[i] + k4.dJ[i]);
    s.t += dt;
}

struct HopRate {
    double tau = 0.0;
    double rate = 0.0;
};

/**
 * Signed hopping coefficient at the current point.  Leaving surface l couples
 * through the column d_{(1-l)l}, so with d10 = -d01:
 *
 *   surface 0:  tau = -P . d10(Q) = +P . d01(Q)
 *   surface 1:  tau = -P . d01(Q)
 *
 * The jump intensity is |tau|; the sign enters through the per-hop phase.
 */
template <class Model>
HopRate hop_rate(const Model& model, const TrajectoryState& s) {
    const CouplingData c = model.coupling(s.Q);
    const double tau = (s.surface == 0 ? 1.0 : -1.0) * s.P * c.d01;
    return {tau, std::fabs(tau)};
}

/** Exponential-clock bookkeeping for the exact thinning mode. */
struct HopClock {
    double accumulated = 0.0;
    double target = 0.0;
};

struct StepOptions {
    bool exact_thinning = false;
};

struct StepResult {
    bool hopped = false;
    double rate_mid = 0.0;
    HopRate rate_after;
};

/**
 * One Markov step: advance the beam by RK4, accumulate the midpoint-rule
 * hopping intensity into log_weight, then decide a hop.  In Bernoulli mode
 * the decision costs exactly one uniform draw per step; in thinning mode an
 * Exp(1) clock is compared against the accumulated intensity instead.  On a
 * hop the phase factor tau/|tau| is evaluated at the post-step state, the
 * surface flips and the hop time (the step endpoint) is recorded.  The beam
 * variables (Q,P,S,A,J) stay continuous across hops.
 */
template <class Model>
StepResult stochastic_step(const Model& model, TrajectoryState& s, double dt,
                           rng::Stream& stream, const StepOptions& opts = {},
                           HopClock* clock = nullptr,
                           const HopRate* rate_before = nullptr) {
    const HopRate r0 = rate_before ? *rate_before : hop_rate(model, s);
    rk4_step(model, s, dt);
    const HopRate r1 = hop_rate(model, s);

    StepResult out;
    out.rate_mid = 0.5 * (r0.rate + r1.rate);
    out.rate_after = r1;
    detail::require<HopProbabilityOverflow>(
        dt * out.rate_mid < 1.0, "dt * hop rate reached 1; decrease the step size");
    s.log_weight += dt * out.rate_mid;

    bool hop = false;
    if (opts.exact_thinning) {
        detail::require<ConfigError>(clock != nullptr, "thinning mode needs a clock");
        clock->accumulated += dt * out.rate_mid;
        if (clock->accumulated >= clock->target) {
            hop = true;
            clock->accumulated = 0.0;
            clock->target = stream.exponential();
        }
    } else {
        hop = stream.uniform() < dt * out.rate_mid;
    }

    if (hop) {
        // tau = 0 with a positive midpoint rate is a measure-zero edge; the
        // neutral factor keeps the estimator finite.
        if (r1.tau != 0.0) s.hop_phase *= r1.tau > 0.0 ? 1.0 : -1.0;
        s.surface = 1 - s.surface;
        s.hop_times.push_back(s.t);
        out.hopped = true;
    }
    return out;
}

/** Evolve the jump-diffusion up to t_final with a fixed step dt. */
template <class Model>
void evolve(const Model& model, TrajectoryState& s, double t_final, double dt,
            rng::Stream& stream, const StepOptions& opts = {}) {
    const int n = detail::step_count(s.t, t_final, dt);
    HopClock clock;
    if (opts.exact_thinning) clock.target = stream.exponential();
    HopRate ahead = hop_rate(model, s);
    for (int i = 0; i < n; ++i) {
        const StepResult r = stochastic_step(model, s, dt, stream, opts, &clock, &ahead);
        // After a hop the cached rate belongs to the old surface; refresh.
        ahead = r.hopped ? hop_rate(model, s) : r.rate_after;
    }
}

struct PrescribedResult {
    cplx tau_product{1.0, 0.0};
    /** Accumulated hop intensity Int |tau(s)| ds along the replayed path. */
    double intensity = 0.0;
};

/**
 * Deterministic replay with hops forced at given times (snapped to the
 * nearest step boundary).  Records the full complex product of the signed
 * hopping coefficients; no survival weights are accumulated, so this is the
 * building block for term-by-term series evaluation.  Coincident hop times
 * apply in sequence at the same boundary.
 */
template <class Model>
PrescribedResult evolve_prescribed(const Model& model, TrajectoryState& s,
                                   double t_final, double dt,
                                   const std::vector<double>& hop_times) {
    const int n = detail::step_count(s.t, t_final, dt);
    const double t0 = s.t;
    std::vector<int> hop_steps;
    hop_steps.reserve(hop_times.size());
    for (double th : hop_times) {
        long long k = std::llround((th - t0) / dt);
        if (k < 0) k = 0;
        if (k > n) k = n;
        hop_steps.push_back(static_cast<int>(k));
    }
    std::sort(hop_steps.begin(), hop_steps.end());

    PrescribedResult out;
    std::size_t next = 0;
    const auto apply_hops = [&](int boundary) {
        while (next < hop_steps.size() && hop_steps[next] == boundary) {
            const HopRate r = hop_rate(model, s);
            out.tau_product *= r.tau;
            if (r.tau != 0.0) s.hop_phase *= r.tau > 0.0 ? 1.0 : -1.0;
            s.surface = 1 - s.surface;
            s.hop_times.push_back(s.t);
            ++next;
        }
    };

    apply_hops(0);
    // |tau| = |P d01(Q)| does not depend on the surface label, so the rate
    // cached across a boundary stays valid even when a hop fires there.
    double rate_prev = hop_rate(model, s).rate;
    for (int i = 0; i < n; ++i) {
        rk4_step(model, s, dt);
        const double rate_now = hop_rate(model, s).rate;
        out.intensity += 0.5 * dt * (rate_prev + rate_now);
        rate_prev = rate_now;
        apply_hops(i + 1);
    }
    return out;
}

} // namespace fgash

#endif

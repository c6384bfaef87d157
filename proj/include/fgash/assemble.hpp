#ifndef FGASH_ASSEMBLE_HPP
#define FGASH_ASSEMBLE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fgash/errors.hpp"
#include "fgash/mesh.hpp"
#include "fgash/sampling.hpp"
#include "fgash/trajectory.hpp"

namespace fgash {

struct AssembleOptions {
    /** Drop the exp(log_weight) compensation factor (ablation studies). */
    bool disable_weights = false;
};

/** Contribution prefactor of one evolved beam, everything except the x profile. */
inline cplx beam_prefactor(const TrajectoryState& s, double quad_weight,
                           const AssembleOptions& opts) {
    const double w = opts.disable_weights ? 1.0 : std::exp(s.log_weight);
    return quad_weight * w * s.A * s.hop_phase;
}

/**
 * Superpose an ensemble of evolved beams on a spatial mesh.  Each state
 * contributes
 *
 *   quad_weight * A * hop_phase * exp(log_weight)
 *     * exp(i (S + P(x-Q))/eps - (x-Q)^2/(2 eps))
 *
 * to the component of its final surface.  The states must share a common
 * final time; the quadrature weight carries the estimator normalization
 * (cell weight for stratified plans, Z/N for independent draws).
 */
inline WaveField assemble(std::span<const TrajectoryState> states,
                          std::span<const double> quad_weights,
                          const XMesh& x_mesh, double eps,
                          const AssembleOptions& opts = {}) {
    detail::require<ConfigError>(states.size() == quad_weights.size(),
                                 "one quadrature weight per state required");
    if (!states.empty()) {
        const double t0 = states[0].t;
        for (const TrajectoryState& s : states)
            detail::require<MixedFinalTimes>(
                std::fabs(s.t - t0) <= 1e-12 * std::max(1.0, std::fabs(t0)),
                "ensemble members reached different final times");
    }
    WaveField out = WaveField::zeros(x_mesh, eps);
    for (std::size_t i = 0; i < states.size(); ++i) {
        const TrajectoryState& s = states[i];
        scatter_beam(s.surface == 0 ? out.u0 : out.u1, x_mesh, eps,
                     s.Q, s.P, s.S, beam_prefactor(s, quad_weights[i], opts));
    }
    return out;
}

struct ComponentErrors {
    double e0 = 0.0;
    double e1 = 0.0;
};

/** Componentwise L2 distance of two fields on the same mesh. */
inline ComponentErrors l2_error(const WaveField& a, const WaveField& b) {
    detail::require<MeshMismatch>(a.mesh == b.mesh && a.eps == b.eps,
                                  "fields live on different meshes");
    ComponentErrors e;
    double s0 = 0.0, s1 = 0.0;
    for (int j = 0; j < a.mesh.n; ++j) {
        s0 += std::norm(a.u0[j] - b.u0[j]);
        s1 += std::norm(a.u1[j] - b.u1[j]);
    }
    e.e0 = std::sqrt(s0 * a.mesh.dx);
    e.e1 = std::sqrt(s1 * a.mesh.dx);
    return e;
}

/** Fraction of the total mass sitting on the upper surface. */
inline double transition_rate(const WaveField& f) {
    const double n0 = f.norm2_u0();
    const double n1 = f.norm2_u1();
    detail::require<ZeroField>(n0 + n1 > 0.0, "field carries no mass");
    return n1 / (n0 + n1);
}

struct ReplicationStats {
    double mean = 0.0;
    double var = 0.0;
    double ci_halfwidth = 0.0;
    int count = 0;
};

/** Mean, unbiased variance and normal 95% CI halfwidth over replications. */
inline ReplicationStats replication_stats(std::span<const double> samples) {
    detail::require<ConfigError>(!samples.empty(), "no replication samples");
    ReplicationStats st;
    st.count = static_cast<int>(samples.size());
    for (double v : samples) st.mean += v;
    st.mean /= st.count;
    if (st.count > 1) {
        double acc = 0.0;
        for (double v : samples) acc += (v - st.mean) * (v - st.mean);
        st.var = acc / (st.count - 1);
    }
    st.ci_halfwidth = 1.96 * std::sqrt(st.var / st.count);
    return st;
}

/**
 * Empirical convergence order between two ensemble sizes: error_a at size_a
 * versus error_b at size_b reads error ~ size^{-rate}.
 */
inline double convergence_rate(double error_a, double error_b,
                               double size_a, double size_b) {
    detail::require<ConfigError>(error_a > 0.0 && error_b > 0.0 &&
                                 size_a > 0.0 && size_b > 0.0 && size_a != size_b,
                                 "convergence rate needs positive errors and distinct sizes");
    return std::log(error_a / error_b) / std::log(size_b / size_a);
}

/**
 * Deterministic low-order evaluation of the jump expansion: the n-hop term
 * integrates the signed coefficient product over the ordered hop times,
 *
 *   sum_n Int_{0<s_1<...<s_n<t} A(t; s_1..s_n) prod_k tau(s_k) exp(i Theta/eps) ds,
 *
 * with hops replayed on step boundaries and the simplex integrated by the
 * trapezoid rule (diagonal cells halved).  Only n <= 2 is supported.
 *
 * Applicability guard: with Lambda the largest accumulated intensity
 * Int |tau| ds measured along the replayed paths, every n-hop term is
 * bounded by Lambda^n / n! relative to the no-hop scale, so the remainder
 * beyond the supported order obeys tail <= Lambda^3/3! e^Lambda.  The guard
 * requires tail <= tail_tol; it certifies the expansion sits in its
 * convergent regime, so lower n_max calls return partial sums of the same
 * certified series.  A cheap pre-pass (the no-hop path and the hop-at-zero
 * path from each active cell, probing both surface flows) rejects hopeless
 * setups before the quadratic sweep; the measured maximum is re-checked
 * after the sweep.  Paths with more hops than replayed are assumed not to
 * reach materially higher intensity, which holds when the coupling is
 * localized around the crossings the replayed paths already traverse.
 */
template <class Model>
WaveField brute_force_series_oracle(const Model& model,
                                    const InitialAmplitudeField& field,
                                    const XMesh& x_mesh, double t_final,
                                    double dt, int n_max,
                                    double floor_rel = 0.0,
                                    double tail_tol = 1e-3) {
    detail::require<ConfigError>(n_max >= 0 && n_max <= 2,
                                 "series oracle supports at most two hops");
    const int n_t = detail::step_count(0.0, t_final, dt);
    detail::require<ConfigError>(n_t >= 64,
                                 "series oracle needs at least 64 time nodes per dimension");

    double lambda_max = 0.0;
    const auto check_tail = [&lambda_max, tail_tol]() {
        const double tail = lambda_max * lambda_max * lambda_max / 6.0 *
                            std::exp(lambda_max);
        detail::require<TailTooLarge>(
            tail <= tail_tol,
            "dropped expansion tail exceeds the accuracy target");
    };

    WaveField out = WaveField::zeros(x_mesh, field.eps);
    const double quad_weight = field.mesh.cell_weight() /
                               std::pow(2.0 * pi * field.eps, 1.5);
    const double floor_abs = floor_rel * field.max_abs;

    const auto time_weight = [n_t](int k) { return (k == 0 || k == n_t) ? 0.5 : 1.0; };

    const auto add_term = [&](const TrajectoryState& final_state, cplx tau_product,
                              double simplex_weight) {
        scatter_beam(final_state.surface == 0 ? out.u0 : out.u1, x_mesh, field.eps,
                     final_state.Q, final_state.P, final_state.S,
                     quad_weight * simplex_weight * tau_product * final_state.A);
    };

    std::vector<TrajectoryState> inits;
    for (int i = 0; i < field.mesh.nq; ++i) {
        for (int k = 0; k < field.mesh.np; ++k) {
            const cplx a = field.A[static_cast<std::size_t>(i) * field.mesh.np + k];
            const double mag = std::abs(a);
            if (mag <= 0.0 || mag < floor_abs) continue;

            TrajectoryState init;
            init.Q = field.mesh.q(i);
            init.P = field.mesh.p(k);
            init.A = a;
            inits.push_back(init);
        }
    }

    for (const TrajectoryState& init : inits) {
        TrajectoryState stay = init, flip = init;
        lambda_max = std::max(
            lambda_max, evolve_prescribed(model, stay, t_final, dt, {}).intensity);
        lambda_max = std::max(
            lambda_max, evolve_prescribed(model, flip, t_final, dt, {0.0}).intensity);
    }
    check_tail();

    for (const TrajectoryState& init : inits) {
        TrajectoryState s0 = init;
        const PrescribedResult r0 = evolve_prescribed(model, s0, t_final, dt, {});
        lambda_max = std::max(lambda_max, r0.intensity);
        add_term(s0, r0.tau_product, 1.0);

        if (n_max >= 1) {
            for (int k1 = 0; k1 <= n_t; ++k1) {
                TrajectoryState s1 = init;
                const PrescribedResult r =
                    evolve_prescribed(model, s1, t_final, dt, {k1 * dt});
                lambda_max = std::max(lambda_max, r.intensity);
                add_term(s1, r.tau_product, dt * time_weight(k1));
            }
        }
        if (n_max >= 2) {
            for (int k1 = 0; k1 <= n_t; ++k1) {
                for (int k2 = k1; k2 <= n_t; ++k2) {
                    TrajectoryState s2 = init;
                    const PrescribedResult r = evolve_prescribed(
                        model, s2, t_final, dt, {k1 * dt, k2 * dt});
                    lambda_max = std::max(lambda_max, r.intensity);
                    double w = dt * dt * time_weight(k1) * time_weight(k2);
                    if (k1 == k2) w *= 0.5;
                    add_term(s2, r.tau_product, w);
                }
            }
        }
    }
    check_tail();
    return out;
}

} // namespace fgash

#endif

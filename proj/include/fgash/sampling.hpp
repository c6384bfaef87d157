#ifndef FGASH_SAMPLING_HPP
#define FGASH_SAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fgash/errors.hpp"
#include "fgash/mesh.hpp"
#include "fgash/rng.hpp"
#include "fgash/types.hpp"

namespace fgash {

/** Gaussian wavepacket N exp(i p0 y / eps) exp(-alpha (y - q0)^2). */
struct GaussianPacket {
    double q0 = 0.0;
    double p0 = 0.0;
    double alpha = 16.0;
    double eps = 1.0;
    double prefactor = 1.0;

    /**
     * scaled = true applies the semiclassical normalization
     * (alpha * eps)^{-1/4}; false keeps a unit prefactor.
     */
    static GaussianPacket make(double q0, double p0, double alpha, double eps,
                               bool scaled) {
        detail::require<ConfigError>(alpha > 0.0 && eps > 0.0, "packet needs alpha, eps > 0");
        GaussianPacket g;
        g.q0 = q0;
        g.p0 = p0;
        g.alpha = alpha;
        g.eps = eps;
        g.prefactor = scaled ? std::pow(alpha * eps, -0.25) : 1.0;
        return g;
    }

    cplx operator()(double y) const {
        const double d = y - q0;
        return std::polar(prefactor * std::exp(-alpha * d * d), p0 * y / eps);
    }
};

/** Windowed-beam cutoff: contributions beyond this many sqrt(eps) are dropped. */
inline constexpr double beam_cutoff_sigmas = 8.0;

/**
 * Complex beam amplitude on every phase-space node, the weight each
 * trajectory starts from.
 */
struct InitialAmplitudeField {
    PhaseSpaceMesh mesh;
    double eps = 0.0;
    std::vector<cplx> A;
    double max_abs = 0.0;

    /** Sum of |A| over nodes; with the cell weight this gives the sampling mass. */
    double abs_sum() const {
        double s = 0.0;
        for (const cplx& v : A) s += std::abs(v);
        return s;
    }
};

/**
 * Windowed trapezoid evaluation of the coherent-state pairing
 *
 *   A(q,p) = 2^{1/2} Int u0(y) exp(-(y-q)^2/(2 eps) - i p (y-q)/eps) dy
 *
 * on an inclusive y-grid over [y_min, y_max].  The Gaussian window keeps the
 * cost proportional to sqrt(eps)/dy per node at truncation error exp(-32).
 * Rejects grids that undersample the fastest oscillation exp(-i p y / eps)
 * present on the mesh (quarter-wavelength rule).
 */
template <class F>
InitialAmplitudeField initial_amplitude(F&& u0, double eps,
                                        const PhaseSpaceMesh& mesh,
                                        double y_min, double y_max, double dy) {
    detail::require<ConfigError>(eps > 0.0, "eps must be positive");
    detail::require<ConfigError>(dy > 0.0 && y_max > y_min, "bad y grid");
    const double p_max = mesh.p_abs_max();
    if (p_max > 0.0) {
        const double quarter_wavelength = (2.0 * pi * eps / p_max) / 4.0;
        detail::require<MeshTooCoarse>(
            dy <= quarter_wavelength,
            "y grid cannot resolve the mesh momenta: dy > wavelength/4");
    }

    const int ny = static_cast<int>(std::lround((y_max - y_min) / dy)) + 1;
    detail::require<ConfigError>(ny >= 9, "y grid too small");

    std::vector<cplx> samples(static_cast<std::size_t>(ny));
    for (int j = 0; j < ny; ++j) samples[j] = u0(y_min + j * dy);

    InitialAmplitudeField field;
    field.mesh = mesh;
    field.eps = eps;
    field.A.assign(mesh.size(), cplx(0.0, 0.0));

    const double window = beam_cutoff_sigmas * std::sqrt(eps);
    const double root2 = std::sqrt(2.0);

    for (int i = 0; i < mesh.nq; ++i) {
        const double q = mesh.q(i);
        const int j_lo = std::max(0, static_cast<int>(std::ceil((q - window - y_min) / dy)));
        const int j_hi = std::min(ny - 1, static_cast<int>(std::floor((q + window - y_min) / dy)));
        if (j_lo > j_hi) continue;
        for (int k = 0; k < mesh.np; ++k) {
            const double p = mesh.p(k);
            // Incremental rotation: the phase -p(y-q)/eps advances by a fixed
            // angle per y node, so one complex multiply replaces sincos.
            const double y0 = y_min + j_lo * dy;
            cplx rot = std::polar(1.0, -p * (y0 - q) / eps);
            const cplx step = std::polar(1.0, -p * dy / eps);
            cplx acc(0.0, 0.0);
            for (int j = j_lo; j <= j_hi; ++j) {
                const double y = y_min + j * dy;
                const double d = y - q;
                const double w = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
                acc += (w * std::exp(-d * d / (2.0 * eps))) * samples[j] * rot;
                rot *= step;
            }
            field.A[static_cast<std::size_t>(i) * mesh.np + k] = root2 * dy * acc;
        }
    }

    for (const cplx& v : field.A) field.max_abs = std::max(field.max_abs, std::abs(v));
    return field;
}

/**
 * Scatter one Gaussian beam exp(i(S + P(x-Q))/eps - (x-Q)^2/(2 eps)) weighted
 * by w into a field component, restricted to the cutoff window.
 */
inline void scatter_beam(std::vector<cplx>& u, const XMesh& mesh, double eps,
                         double Q, double P, double S, cplx w) {
    const double window = beam_cutoff_sigmas * std::sqrt(eps);
    const int j_lo = std::max(0, static_cast<int>(std::ceil((Q - window - mesh.x_min) / mesh.dx)));
    const int j_hi = std::min(mesh.n - 1,
                              static_cast<int>(std::floor((Q + window - mesh.x_min) / mesh.dx)));
    if (j_lo > j_hi) return;
    const double x0 = mesh.x(j_lo);
    cplx rot = std::polar(1.0, (S + P * (x0 - Q)) / eps);
    const cplx step = std::polar(1.0, P * mesh.dx / eps);
    for (int j = j_lo; j <= j_hi; ++j) {
        const double d = mesh.x(j) - Q;
        u[j] += w * std::exp(-d * d / (2.0 * eps)) * rot;
        rot *= step;
    }
}

/**
 * Quadrature reconstruction of the wavefunction the amplitude field encodes
 * at time zero; the mismatch against the original packet measures the
 * initial-data error of the whole representation.
 */
inline WaveField reconstruct_initial(const InitialAmplitudeField& field, const XMesh& x_mesh) {
    WaveField out = WaveField::zeros(x_mesh, field.eps);
    const double weight = field.mesh.cell_weight() /
                          std::pow(2.0 * pi * field.eps, 1.5);
    for (int i = 0; i < field.mesh.nq; ++i) {
        for (int k = 0; k < field.mesh.np; ++k) {
            const cplx a = field.A[static_cast<std::size_t>(i) * field.mesh.np + k];
            if (a == cplx(0.0, 0.0)) continue;
            scatter_beam(out.u0, x_mesh, field.eps, field.mesh.q(i), field.mesh.p(k),
                         0.0, weight * a);
        }
    }
    return out;
}

/** One mesh node of the stratified plan with its copy count. */
struct PlanEntry {
    int iq = 0, ip = 0;
    double q = 0.0, p = 0.0;
    cplx A;
    int copies = 0;
};

/**
 * Stratified splitting: node i receives ceil(|A_i| / d_M) copies with
 * d_M = max|A| / M, so no copy carries more than d_M of amplitude mass.
 */
struct PartitionPlan {
    int M = 0;
    double d_M = 0.0;
    double eps = 0.0;
    double cell_weight = 0.0;
    std::vector<PlanEntry> entries;
    std::int64_t total_copies = 0;

    /**
     * Copy k of an entry, defined through the prefix sequence
     * pk = A * (k / n).  Consecutive prefixes are within a factor two of each
     * other componentwise, so each difference pk+1 - pk is exact (Sterbenz)
     * and the left-to-right sum telescopes to A bit-for-bit.
     */
    static cplx copy_amplitude(const PlanEntry& e, int k) {
        const auto prefix = [&e](int m) -> cplx {
            const double f = static_cast<double>(m) / static_cast<double>(e.copies);
            return {e.A.real() * f, e.A.imag() * f};
        };
        return prefix(k + 1) - prefix(k);
    }

    /** Quadrature weight shared by all copies in the stratified estimator. */
    double copy_weight() const {
        return cell_weight / std::pow(2.0 * pi * eps, 1.5);
    }
};

/**
 * Build the stratified plan.  Nodes with |A| below floor_rel * max|A| carry
 * no usable signal and are dropped; floor_rel = 0 keeps every nonzero node.
 */
inline PartitionPlan build_partition(const InitialAmplitudeField& field, int M,
                                     double floor_rel = 1e-8) {
    detail::require<ConfigError>(M >= 1, "partition parameter M must be >= 1");
    detail::require<ConfigError>(floor_rel >= 0.0, "amplitude floor must be >= 0");
    detail::require<EmptyField>(field.max_abs > 0.0,
                                "amplitude field is identically zero");
    PartitionPlan plan;
    plan.M = M;
    plan.d_M = field.max_abs / M;
    plan.eps = field.eps;
    plan.cell_weight = field.mesh.cell_weight();
    const double floor_abs = floor_rel * field.max_abs;
    for (int i = 0; i < field.mesh.nq; ++i) {
        for (int k = 0; k < field.mesh.np; ++k) {
            const cplx a = field.A[static_cast<std::size_t>(i) * field.mesh.np + k];
            const double mag = std::abs(a);
            if (mag <= 0.0 || mag < floor_abs) continue;
            PlanEntry e;
            e.iq = i;
            e.ip = k;
            e.q = field.mesh.q(i);
            e.p = field.mesh.p(k);
            e.A = a;
            e.copies = static_cast<int>(std::ceil(mag / plan.d_M));
            plan.entries.push_back(e);
            plan.total_copies += e.copies;
        }
    }
    detail::require<EmptyField>(!plan.entries.empty(),
                                "amplitude floor removed every node");
    return plan;
}

/**
 * Draws mesh nodes with probability proportional to |A| for the
 * independent-sampling estimator.  normalization() is the prefactor Z the
 * estimator splits evenly across draws.
 */
class IidSampler {
public:
    IidSampler(const InitialAmplitudeField& field, double floor_rel = 0.0) {
        detail::require<EmptyField>(field.max_abs > 0.0,
                                    "amplitude field is identically zero");
        const double floor_abs = floor_rel * field.max_abs;
        double acc = 0.0;
        for (std::size_t i = 0; i < field.A.size(); ++i) {
            const double mag = std::abs(field.A[i]);
            if (mag <= 0.0 || mag < floor_abs) continue;
            acc += mag;
            index_.push_back(i);
            cdf_.push_back(acc);
        }
        detail::require<EmptyField>(acc > 0.0, "amplitude floor removed every node");
        mass_ = acc;
        normalization_ = acc * field.mesh.cell_weight() /
                         std::pow(2.0 * pi * field.eps, 1.5);
    }

    std::size_t draw(rng::Stream& stream) const {
        const double u = stream.uniform() * mass_;
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const std::size_t k = std::min(index_.size() - 1,
                                       static_cast<std::size_t>(it - cdf_.begin()));
        return index_[k];
    }

    double normalization() const { return normalization_; }

private:
    std::vector<std::size_t> index_;
    std::vector<double> cdf_;
    double mass_ = 0.0;
    double normalization_ = 0.0;
};

} // namespace fgash

#endif

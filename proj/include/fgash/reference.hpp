#ifndef FGASH_REFERENCE_HPP
#define FGASH_REFERENCE_HPP

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fgash/errors.hpp"
#include "fgash/mesh.hpp"
#include "fgash/models.hpp"
#include "fgash/rng.hpp"
#include "fgash/types.hpp"

namespace fgash {

/**
 * Strang-split spectral stepper for the two-level equation
 *
 *   i eps d_t v = -(eps^2/2) d_xx v + H(x) v
 *
 * in the diabatic frame on a periodic box: half potential step, full kinetic
 * step in Fourier space, half potential step.  The pointwise propagator
 * exp(-i theta H) with H = c I + a sz + b sx is closed-form:
 * e^{-i theta c} (cos(theta r) I - i sin(theta r) (a sz + b sx)/r).
 * Node propagators and mode phases depend only on (mesh, dt), so they are
 * precomputed once; plans use FFTW_ESTIMATE, which picks the same algorithm
 * every run and keeps results bit-reproducible.
 */
class TsspWorkspace {
public:
    template <class Model>
    TsspWorkspace(const Model& model, const XMesh& mesh, double eps, double dt)
        : mesh_(mesh), eps_(eps), dt_(dt), n_(mesh.n) {
        detail::require<ConfigError>(eps > 0.0 && dt > 0.0, "bad eps or dt");
        detail::require<ConfigError>((n_ & (n_ - 1)) == 0,
                                     "spectral node count must be a power of two");
        buf0_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_));
        buf1_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_));
        fwd0_ = fftw_plan_dft_1d(n_, buf0_, buf0_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd0_ = fftw_plan_dft_1d(n_, buf0_, buf0_, FFTW_BACKWARD, FFTW_ESTIMATE);
        fwd1_ = fftw_plan_dft_1d(n_, buf1_, buf1_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd1_ = fftw_plan_dft_1d(n_, buf1_, buf1_, FFTW_BACKWARD, FFTW_ESTIMATE);

        const double theta = 0.5 * dt / eps;
        e00_.resize(n_); e01_.resize(n_); e11_.resize(n_);
        for (int j = 0; j < n_; ++j) {
            const DiabaticJets dj = model.diabatic(mesh.x(j));
            const double a = dj.a.v, b = dj.b.v, c = dj.c.v;
            const double r = std::sqrt(a * a + b * b);
            const cplx base = std::polar(1.0, -theta * c);
            if (r < 1e-300) {
                e00_[j] = base;
                e11_[j] = base;
                e01_[j] = 0.0;
            } else {
                const double cs = std::cos(theta * r), sn = std::sin(theta * r);
                e00_[j] = base * cplx(cs, -sn * a / r);
                e11_[j] = base * cplx(cs, sn * a / r);
                e01_[j] = base * cplx(0.0, -sn * b / r);
            }
        }

        kin_.resize(n_);
        const double k_unit = 2.0 * pi / mesh.length();
        for (int j = 0; j < n_; ++j) {
            const int m = j <= n_ / 2 ? j : j - n_;
            const double kappa = k_unit * m;
            // The 1/n normalizes the unscaled FFTW round trip.
            kin_[j] = std::polar(1.0 / n_, -eps * dt * 0.5 * kappa * kappa);
        }
    }

    ~TsspWorkspace() {
        fftw_destroy_plan(fwd0_); fftw_destroy_plan(bwd0_);
        fftw_destroy_plan(fwd1_); fftw_destroy_plan(bwd1_);
        fftw_free(buf0_); fftw_free(buf1_);
    }

    TsspWorkspace(const TsspWorkspace&) = delete;
    TsspWorkspace& operator=(const TsspWorkspace&) = delete;

    const XMesh& mesh() const { return mesh_; }
    double dt() const { return dt_; }
    double eps() const { return eps_; }

    /** Advance the diabatic field by one dt in place. */
    void step(DiabaticField& f) const {
        detail::require<MeshMismatch>(f.mesh == mesh_ && f.eps == eps_,
                                      "field does not match the workspace mesh");
        load(f);
        half_potential();
        fftw_execute(fwd0_);
        fftw_execute(fwd1_);
        for (int j = 0; j < n_; ++j) {
            at(buf0_, j) *= kin_[j];
            at(buf1_, j) *= kin_[j];
        }
        fftw_execute(bwd0_);
        fftw_execute(bwd1_);
        half_potential();
        store(f);
    }

private:
    XMesh mesh_;
    double eps_, dt_;
    int n_;
    fftw_complex* buf0_;
    fftw_complex* buf1_;
    fftw_plan fwd0_, bwd0_, fwd1_, bwd1_;
    std::vector<cplx> e00_, e01_, e11_, kin_;

    static cplx& at(fftw_complex* buf, int j) {
        return *reinterpret_cast<cplx*>(buf + j);
    }

    void load(const DiabaticField& f) const {
        for (int j = 0; j < n_; ++j) {
            at(buf0_, j) = f.v0[j];
            at(buf1_, j) = f.v1[j];
        }
    }

    void store(DiabaticField& f) const {
        for (int j = 0; j < n_; ++j) {
            f.v0[j] = at(buf0_, j);
            f.v1[j] = at(buf1_, j);
        }
    }

    void half_potential() const {
        for (int j = 0; j < n_; ++j) {
            const cplx a = at(buf0_, j), b = at(buf1_, j);
            at(buf0_, j) = e00_[j] * a + e01_[j] * b;
            at(buf1_, j) = e01_[j] * a + e11_[j] * b;
        }
    }
};

/**
 * Project a diabatic field onto the adiabatic basis with a sign-continuous
 * eigenvector sweep from the left edge (canonical gauge at the first node).
 */
template <class Model>
WaveField adiabatic_project(const Model& model, const DiabaticField& f) {
    WaveField out = WaveField::zeros(f.mesh, f.eps);
    std::optional<std::pair<Vec2, Vec2>> anchor;
    for (int j = 0; j < f.mesh.n; ++j) {
        const AdiabaticData ad = adiabatic_decompose(model.diabatic(f.mesh.x(j)), anchor);
        out.u0[j] = ad.psi0.x * f.v0[j] + ad.psi0.y * f.v1[j];
        out.u1[j] = ad.psi1.x * f.v0[j] + ad.psi1.y * f.v1[j];
        anchor = std::make_pair(ad.psi0, ad.psi1);
    }
    return out;
}

/** Lift a scalar profile on the lower surface into the diabatic frame. */
template <class Model, class F>
DiabaticField lift_to_diabatic(const Model& model, F&& packet, const XMesh& mesh,
                               double eps) {
    DiabaticField f = DiabaticField::zeros(mesh, eps);
    std::optional<std::pair<Vec2, Vec2>> anchor;
    for (int j = 0; j < mesh.n; ++j) {
        const AdiabaticData ad = adiabatic_decompose(model.diabatic(mesh.x(j)), anchor);
        const cplx g = packet(mesh.x(j));
        f.v0[j] = g * ad.psi0.x;
        f.v1[j] = g * ad.psi0.y;
        anchor = std::make_pair(ad.psi0, ad.psi1);
    }
    return f;
}

/**
 * Reject fields whose edge amplitude is large enough to wrap around the
 * periodic box and contaminate the solution.  The threshold must sit above
 * the far momentum tail of the recorded setups (a Gaussian packet's fastest
 * components reach the edge of the standard box near the final time at a few
 * 1e-7 of the norm, which is harmless at the comparison tolerances in use)
 * and below genuine bulk arrival, which enters at 1e-3 and above.
 */
inline void check_boundary_clean(const DiabaticField& f) {
    const double norm = std::sqrt(f.norm2_total());
    const auto edge = [&f](int j) {
        return std::sqrt(std::norm(f.v0[j]) + std::norm(f.v1[j]));
    };
    detail::require<BoundaryContamination>(
        std::max(edge(0), edge(f.mesh.n - 1)) <= 1e-5 * norm,
        "wave amplitude reached the edge of the periodic box");
}

namespace detail {

inline std::uint64_t hash_double(std::uint64_t h, double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    return rng::mix64(h ^ rng::mix64(bits));
}

} // namespace detail

/**
 * Identifies one reference solution for on-disk caching.  The tag must pin
 * down the model and the initial data (the solver cannot introspect either),
 * the numeric fields pin the discretization.
 */
struct ReferenceKey {
    std::string tag;
    double eps = 0.0;
    double dt = 0.0;
    double t = 0.0;
    double x_min = 0.0, dx = 0.0;
    int n = 0;

    std::string filename() const {
        std::uint64_t h = 0x5A17BEEFCAFE1234ull;
        for (char c : tag) h = rng::mix64(h ^ static_cast<std::uint64_t>(c));
        for (double v : {eps, dt, t, x_min, dx, static_cast<double>(n)})
            h = detail::hash_double(h, v);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "ref_%016llx.bin",
                      static_cast<unsigned long long>(h));
        return buf;
    }
};

namespace detail {

inline constexpr std::uint64_t ref_cache_magic = 0xF6A5'0001'BEEF'0003ull;

inline bool load_reference(const std::filesystem::path& path, const ReferenceKey& key,
                           WaveField& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return false;
    std::uint64_t magic = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
    if (!in.good() || magic != ref_cache_magic) return false;
    double meta[6];
    in.read(reinterpret_cast<char*>(meta), sizeof(meta));
    if (!in.good()) return false;
    if (meta[0] != key.eps || meta[1] != key.t || meta[2] != key.x_min ||
        meta[3] != key.dx || meta[4] != static_cast<double>(key.n) ||
        meta[5] != key.dt)
        return false;
    XMesh mesh;
    mesh.x_min = key.x_min;
    mesh.dx = key.dx;
    mesh.n = key.n;
    out = WaveField::zeros(mesh, key.eps);
    const std::streamsize bytes = static_cast<std::streamsize>(sizeof(cplx) * key.n);
    in.read(reinterpret_cast<char*>(out.u0.data()), bytes);
    in.read(reinterpret_cast<char*>(out.u1.data()), bytes);
    return in.good();
}

inline void store_reference(const std::filesystem::path& path, const ReferenceKey& key,
                            const WaveField& f) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) return;
    out.write(reinterpret_cast<const char*>(&ref_cache_magic), sizeof(ref_cache_magic));
    const double meta[6] = {key.eps, key.t, key.x_min, key.dx,
                            static_cast<double>(key.n), key.dt};
    out.write(reinterpret_cast<const char*>(meta), sizeof(meta));
    const std::streamsize bytes = static_cast<std::streamsize>(sizeof(cplx) * key.n);
    out.write(reinterpret_cast<const char*>(f.u0.data()), bytes);
    out.write(reinterpret_cast<const char*>(f.u1.data()), bytes);
}

} // namespace detail

/**
 * Propagate the packet from the lower surface through the splitting scheme
 * and return the adiabatic projections at the requested times (which must be
 * multiples of dt, nondecreasing).  With a cache directory, snapshots are
 * reused across invocations keyed by every parameter that affects the bits.
 */
template <class Model, class F>
std::vector<WaveField> reference_solve(const Model& model, F&& packet,
                                       const XMesh& mesh, double eps, double dt,
                                       const std::vector<double>& times,
                                       const std::string& cache_tag = {},
                                       const std::string& cache_dir = {}) {
    detail::require<ConfigError>(!times.empty(), "no output times requested");

    std::vector<WaveField> out(times.size());
    std::vector<bool> have(times.size(), false);

    ReferenceKey key;
    key.tag = cache_tag;
    key.eps = eps;
    key.dt = dt;
    key.x_min = mesh.x_min;
    key.dx = mesh.dx;
    key.n = mesh.n;

    const bool use_cache = !cache_dir.empty() && !cache_tag.empty();
    bool all_cached = true;
    if (use_cache) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            key.t = times[i];
            if (detail::load_reference(std::filesystem::path(cache_dir) / key.filename(),
                                       key, out[i]))
                have[i] = true;
            else
                all_cached = false;
        }
        if (all_cached) return out;
    }

    DiabaticField f = lift_to_diabatic(model, packet, mesh, eps);
    check_boundary_clean(f);
    TsspWorkspace work(model, mesh, eps, dt);

    double t = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        detail::require<ConfigError>(times[i] >= t - 1e-12, "output times must be sorted");
        const int steps = detail::step_count(t, times[i], dt);
        for (int k = 0; k < steps; ++k) work.step(f);
        t = times[i];
        check_boundary_clean(f);
        if (!have[i]) {
            out[i] = adiabatic_project(model, f);
            if (use_cache) {
                key.t = times[i];
                detail::store_reference(
                    std::filesystem::path(cache_dir) / key.filename(), key, out[i]);
            }
        }
    }
    return out;
}

} // namespace fgash

#endif

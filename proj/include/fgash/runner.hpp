#ifndef FGASH_RUNNER_HPP
#define FGASH_RUNNER_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fgash/assemble.hpp"
#include "fgash/config.hpp"
#include "fgash/csv.hpp"
#include "fgash/errors.hpp"
#include "fgash/mesh.hpp"
#include "fgash/models.hpp"
#include "fgash/reference.hpp"
#include "fgash/rng.hpp"
#include "fgash/sampling.hpp"
#include "fgash/trajectory.hpp"

namespace fgash {

/**
 * Work is split into fixed blocks of trajectories and partial fields are
 * merged in block order, so the assembled result is bit-identical for any
 * worker count.  Never change the block size casually: it is part of the
 * reproducibility contract of archived runs.
 */
inline constexpr std::int64_t trajectory_block = 512;

/** Ensemble-level counters; maxima and integer sums merge order-free. */
struct EnsembleDiagnostics {
    std::int64_t trajectories = 0;
    std::int64_t total_hops = 0;
    std::int64_t significant_hops = 0;
    std::int64_t significant_hops_outside = 0;
    std::int64_t multi_hop_trajectories = 0;
    std::int64_t max_hops_single = 0;
    double max_symplectic_defect = 0.0;
    double max_step_hop_prob = 0.0;

    void merge(const EnsembleDiagnostics& o) {
        trajectories += o.trajectories;
        total_hops += o.total_hops;
        significant_hops += o.significant_hops;
        significant_hops_outside += o.significant_hops_outside;
        multi_hop_trajectories += o.multi_hop_trajectories;
        max_hops_single = std::max(max_hops_single, o.max_hops_single);
        max_symplectic_defect = std::max(max_symplectic_defect, o.max_symplectic_defect);
        max_step_hop_prob = std::max(max_step_hop_prob, o.max_step_hop_prob);
    }
};

namespace detail {

template <class Fn>
void parallel_blocks(std::int64_t n_blocks, int workers, Fn&& body) {
    if (workers <= 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b) body(b);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (;;) {
                    const std::int64_t b = next.fetch_add(1);
                    if (b >= n_blocks) break;
                    body(b);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace detail

/**
 * Cache tag naming everything about the reference solve that the binary key
 * cannot capture: model, gap parameter and the initial packet.  Every entry
 * point that touches the cache must build tags through this function.
 */
/** Resolve the cache directory: config wins, then the environment, then cwd. */
inline std::string resolve_cache_dir(const RunConfig& cfg) {
    if (!cfg.cache_dir.empty()) return cfg.cache_dir;
    if (const char* env = std::getenv("FGASH_CACHE_DIR"); env && *env) return env;
    return "ref_cache";
}

inline std::string reference_cache_tag(const RunConfig& cfg) {
    std::string tag = to_string(cfg.model);
    for (double v : {cfg.delta, cfg.epsilon, cfg.q0, cfg.p0, cfg.alpha,
                     cfg.scaled_norm ? 1.0 : 0.0})
        tag += ":" + csv::format(v);
    return tag;
}

struct RunOutputs {
    std::vector<double> checkpoint_times;
    std::vector<WaveField> mean_fields;
    std::vector<WaveField> reference_fields;   // subsampled onto the run mesh
    std::vector<double> reference_rates;       // from the fine reference field
    std::vector<double> e0_final, e1_final;    // per replication, final time
    std::vector<std::vector<double>> rates;    // [checkpoint][replication]
    EnsembleDiagnostics diagnostics;
    double eps_in = 0.0;
    std::int64_t trajectories_per_replication = 0;
};

/**
 * Drives the full protocol for one configuration: initial amplitude field,
 * stratified or independent sampling, stochastic evolution with checkpoint
 * assembly, optional spectral reference, replication statistics and CSV
 * output.  Construction performs all the deterministic preprocessing.
 */
class Runner {
public:
    explicit Runner(const RunConfig& cfg)
        : cfg_(cfg), model_(cfg.model, cfg.delta),
          packet_(GaussianPacket::make(cfg.q0, cfg.p0, cfg.alpha, cfg.epsilon,
                                       cfg.scaled_norm)),
          x_mesh_(cfg.x_mesh()) {
        cfg_.cache_dir = resolve_cache_dir(cfg_);
        validate_config(cfg_, model_);
        field_ = initial_amplitude(packet_, cfg_.epsilon, cfg_.phase_mesh(),
                                   cfg_.x_min, cfg_.x_max, cfg_.dy);
        if (cfg_.sampling_mode == SamplingMode::stratified) {
            plan_ = build_partition(field_, cfg_.partition_m, cfg_.amplitude_floor);
            offsets_.assign(1, 0);
            for (const PlanEntry& e : plan_->entries)
                offsets_.push_back(offsets_.back() + e.copies);
            n_per_rep_ = plan_->total_copies;
            copy_weight_ = plan_->copy_weight();
        } else {
            sampler_.emplace(field_, cfg_.amplitude_floor);
            n_per_rep_ = cfg_.n_traj;
            copy_weight_ = sampler_->normalization() / static_cast<double>(cfg_.n_traj);
        }
        if (cfg_.checkpoint_every > 0.0) {
            const int c = detail::step_count(0.0, cfg_.t_final, cfg_.checkpoint_every);
            for (int k = 1; k <= c; ++k) checkpoint_times_.push_back(k * cfg_.checkpoint_every);
        } else {
            checkpoint_times_.push_back(cfg_.t_final);
        }
        significance_ = 0.1 * field_.max_abs;
    }

    const RunConfig& config() const { return cfg_; }
    const ModelPotential& model() const { return model_; }
    const GaussianPacket& packet() const { return packet_; }
    const InitialAmplitudeField& amplitude_field() const { return field_; }
    const std::optional<PartitionPlan>& plan() const { return plan_; }
    std::int64_t trajectories_per_replication() const { return n_per_rep_; }
    const std::vector<double>& checkpoint_times() const { return checkpoint_times_; }

    std::string cache_tag() const { return reference_cache_tag(cfg_); }

    /** Reference snapshots at the checkpoint times, on the fine mesh. */
    std::vector<WaveField> reference_fine() const {
        return reference_solve(model_, packet_, cfg_.reference_mesh(), cfg_.epsilon,
                               cfg_.ref_dt, checkpoint_times_, cache_tag(),
                               cfg_.cache_dir);
    }

    /** Restrict a fine reference field onto the run mesh (nested grids). */
    WaveField subsample_to_run_mesh(const WaveField& fine) const {
        const double ratio = cfg_.dx / cfg_.ref_dx;
        const int r = static_cast<int>(std::lround(ratio));
        detail::require<ConfigError>(
            r >= 1 && std::fabs(ratio - r) < 1e-9,
            "reference mesh must refine the run mesh by an integer factor");
        WaveField out = WaveField::zeros(x_mesh_, cfg_.epsilon);
        for (int j = 0; j < x_mesh_.n; ++j) {
            out.u0[j] = fine.u0[static_cast<std::size_t>(j) * r];
            out.u1[j] = fine.u1[static_cast<std::size_t>(j) * r];
        }
        return out;
    }

    /** One replication: assembled fields at every checkpoint plus counters. */
    std::vector<WaveField> run_replication(int rep, EnsembleDiagnostics& diag) const {
        const std::size_t n_cp = checkpoint_times_.size();
        std::vector<std::size_t> draws;
        if (sampler_) {
            rng::Stream pick(rng::substream(cfg_.seed, rng::purpose_sampling,
                                            static_cast<std::uint64_t>(rep), 0));
            draws.resize(static_cast<std::size_t>(n_per_rep_));
            for (std::size_t g = 0; g < draws.size(); ++g) draws[g] = sampler_->draw(pick);
        }

        const std::int64_t n_blocks =
            (n_per_rep_ + trajectory_block - 1) / trajectory_block;
        struct BlockResult {
            std::vector<WaveField> fields;
            EnsembleDiagnostics diag;
        };
        std::vector<BlockResult> blocks(static_cast<std::size_t>(n_blocks));

        const int workers = cfg_.workers > 0
                                ? cfg_.workers
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

        detail::parallel_blocks(n_blocks, workers, [&](std::int64_t b) {
            BlockResult& out = blocks[static_cast<std::size_t>(b)];
            out.fields.reserve(n_cp);
            for (std::size_t c = 0; c < n_cp; ++c)
                out.fields.push_back(WaveField::zeros(x_mesh_, cfg_.epsilon));
            const std::int64_t g_lo = b * trajectory_block;
            const std::int64_t g_hi = std::min(n_per_rep_, g_lo + trajectory_block);
            for (std::int64_t g = g_lo; g < g_hi; ++g)
                run_one(rep, g, draws, out.fields, out.diag);
        });

        std::vector<WaveField> fields;
        fields.reserve(n_cp);
        for (std::size_t c = 0; c < n_cp; ++c)
            fields.push_back(WaveField::zeros(x_mesh_, cfg_.epsilon));
        for (const BlockResult& br : blocks) {
            for (std::size_t c = 0; c < n_cp; ++c) {
                for (int j = 0; j < x_mesh_.n; ++j) {
                    fields[c].u0[j] += br.fields[c].u0[j];
                    fields[c].u1[j] += br.fields[c].u1[j];
                }
            }
            diag.merge(br.diag);
        }
        return fields;
    }

    /** Full protocol over all replications. */
    RunOutputs run() const {
        RunOutputs out;
        out.checkpoint_times = checkpoint_times_;
        out.trajectories_per_replication = n_per_rep_;
        const std::size_t n_cp = checkpoint_times_.size();

        if (cfg_.with_reference) {
            const std::vector<WaveField> fine = reference_fine();
            out.reference_fields.reserve(n_cp);
            out.reference_rates.reserve(n_cp);
            for (const WaveField& f : fine) {
                out.reference_fields.push_back(subsample_to_run_mesh(f));
                out.reference_rates.push_back(transition_rate(f));
            }
        }

        const WaveField recon = reconstruct_initial(field_, x_mesh_);
        out.eps_in = initial_error(recon);

        out.rates.assign(n_cp, {});
        for (std::size_t c = 0; c < n_cp; ++c)
            out.mean_fields.push_back(WaveField::zeros(x_mesh_, cfg_.epsilon));

        for (int rep = 0; rep < cfg_.replications; ++rep) {
            EnsembleDiagnostics diag;
            const std::vector<WaveField> fields = run_replication(rep, diag);
            out.diagnostics.merge(diag);
            for (std::size_t c = 0; c < n_cp; ++c) {
                out.rates[c].push_back(transition_rate(fields[c]));
                for (int j = 0; j < x_mesh_.n; ++j) {
                    out.mean_fields[c].u0[j] += fields[c].u0[j];
                    out.mean_fields[c].u1[j] += fields[c].u1[j];
                }
            }
            if (cfg_.with_reference) {
                const ComponentErrors e =
                    l2_error(fields.back(), out.reference_fields.back());
                out.e0_final.push_back(e.e0);
                out.e1_final.push_back(e.e1);
            }
        }
        const double inv_r = 1.0 / cfg_.replications;
        for (std::size_t c = 0; c < n_cp; ++c)
            for (int j = 0; j < x_mesh_.n; ++j) {
                out.mean_fields[c].u0[j] *= inv_r;
                out.mean_fields[c].u1[j] *= inv_r;
            }
        return out;
    }

    /** L2 distance between a reconstructed field and the exact packet samples. */
    double initial_error(const WaveField& recon) const {
        double acc = 0.0;
        for (int j = 0; j < x_mesh_.n; ++j)
            acc += std::norm(recon.u0[j] - packet_(x_mesh_.x(j))) + std::norm(recon.u1[j]);
        return std::sqrt(acc * x_mesh_.dx);
    }

private:
    RunConfig cfg_;
    ModelPotential model_;
    GaussianPacket packet_;
    XMesh x_mesh_;
    InitialAmplitudeField field_;
    std::optional<PartitionPlan> plan_;
    std::optional<IidSampler> sampler_;
    std::vector<std::int64_t> offsets_;
    std::vector<double> checkpoint_times_;
    std::int64_t n_per_rep_ = 0;
    double copy_weight_ = 0.0;
    double significance_ = 0.0;

    /** Evolve global copy g of one replication and scatter its checkpoints. */
    void run_one(int rep, std::int64_t g, const std::vector<std::size_t>& draws,
                 std::vector<WaveField>& fields, EnsembleDiagnostics& diag) const {
        TrajectoryState s;
        bool significant = false;
        if (plan_) {
            const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), g);
            const std::size_t e_idx = static_cast<std::size_t>(it - offsets_.begin()) - 1;
            const PlanEntry& e = plan_->entries[e_idx];
            s.Q = e.q;
            s.P = e.p;
            s.A = PartitionPlan::copy_amplitude(e, static_cast<int>(g - offsets_[e_idx]));
            significant = std::abs(e.A) >= significance_;
        } else {
            const std::size_t node = draws[static_cast<std::size_t>(g)];
            const cplx a = field_.A[node];
            const int iq = static_cast<int>(node) / field_.mesh.np;
            const int ip = static_cast<int>(node) % field_.mesh.np;
            s.Q = field_.mesh.q(iq);
            s.P = field_.mesh.p(ip);
            s.A = a / std::abs(a);
            significant = std::abs(a) >= significance_;
        }
        s.surface = cfg_.initial_surface;
        s.rng_stream = rng::substream(cfg_.seed, rng::purpose_trajectory,
                                      static_cast<std::uint64_t>(rep),
                                      static_cast<std::uint64_t>(g));
        rng::Stream stream(s.rng_stream);

        StepOptions opts;
        opts.exact_thinning = cfg_.exact_thinning;
        HopClock clock;
        if (opts.exact_thinning) clock.target = stream.exponential();
        AssembleOptions aopts;
        aopts.disable_weights = cfg_.disable_weights;

        HopRate ahead = hop_rate(model_, s);
        for (std::size_t c = 0; c < checkpoint_times_.size(); ++c) {
            const int n = detail::step_count(s.t, checkpoint_times_[c], cfg_.dt);
            for (int i = 0; i < n; ++i) {
                const StepResult r =
                    stochastic_step(model_, s, cfg_.dt, stream, opts, &clock, &ahead);
                diag.max_step_hop_prob =
                    std::max(diag.max_step_hop_prob, cfg_.dt * r.rate_mid);
                if (r.hopped) {
                    ahead = hop_rate(model_, s);
                    ++diag.total_hops;
                    if (significant) {
                        ++diag.significant_hops;
                        if (std::fabs(s.Q) >= 1.5) ++diag.significant_hops_outside;
                    }
                } else {
                    ahead = r.rate_after;
                }
            }
            scatter_beam(s.surface == 0 ? fields[c].u0 : fields[c].u1, x_mesh_,
                         cfg_.epsilon, s.Q, s.P, s.S,
                         beam_prefactor(s, copy_weight_, aopts));
        }
        ++diag.trajectories;
        const std::int64_t hops = static_cast<std::int64_t>(s.hop_times.size());
        diag.max_hops_single = std::max(diag.max_hops_single, hops);
        if (hops >= 2) ++diag.multi_hop_trajectories;
        diag.max_symplectic_defect =
            std::max(diag.max_symplectic_defect, symplectic_defect(s));
    }
};

namespace detail {

inline void write_field_csv(const std::string& path, const WaveField& f) {
    csv::Writer w(path, {"x", "re_u0", "im_u0", "re_u1", "im_u1"});
    for (int j = 0; j < f.mesh.n; ++j)
        w.row({csv::format(f.mesh.x(j)),
               csv::format(f.u0[j].real()), csv::format(f.u0[j].imag()),
               csv::format(f.u1[j].real()), csv::format(f.u1[j].imag())});
}

} // namespace detail

} // namespace fgash

#endif

/**
 * Acceptance gate for the simulator.  Each numbered criterion is a
 * self-contained experiment with its stated tolerance; the binary prints one
 * PASS or FAIL line per criterion and exits nonzero if any of them failed.
 *
 * Usage: acceptance [k|all]   (k = 1..13)
 *
 * Environment:
 *   FGASH_ARTIFACTS  directory for result tables shared between criteria
 *                    (criterion 3 reads the study written by criterion 2)
 *   FGASH_CACHE_DIR  reference-solution cache shared across criteria
 *   FGASH_CLI        path to the command-line binary (criterion 13)
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "json.hpp"

#include "fgash/assemble.hpp"
#include "fgash/config.hpp"
#include "fgash/csv.hpp"
#include "fgash/errors.hpp"
#include "fgash/mesh.hpp"
#include "fgash/models.hpp"
#include "fgash/reference.hpp"
#include "fgash/rng.hpp"
#include "fgash/runner.hpp"
#include "fgash/sampling.hpp"
#include "fgash/trajectory.hpp"

#include "support/test_models.hpp"

namespace {

using namespace fgash;
using nlohmann::json;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return (v && *v) ? std::string(v) : fallback;
}

std::filesystem::path artifacts_dir() {
    const std::filesystem::path p = env_or("FGASH_ARTIFACTS", "acceptance_artifacts");
    std::filesystem::create_directories(p);
    return p;
}

std::string shared_cache_dir() { return env_or("FGASH_CACHE_DIR", "ref_cache"); }

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

bool within_factor(double value, double target, double factor) {
    return value >= target / factor && value <= target * factor;
}

/** Default experiment: avoided-crossing model, Gaussian datum, delta = eps. */
RunConfig experiment_config(double eps, const json& overrides = json::object()) {
    json j = overrides;
    j["epsilon"] = eps;
    return parse_config(j);
}

struct CellResult {
    ReplicationStats e0;
    std::int64_t n_traj = 0;
};

CellResult run_cell(const RunConfig& cfg) {
    Runner runner(cfg);
    const RunOutputs out = runner.run();
    CellResult c;
    c.e0 = replication_stats(out.e0_final);
    c.n_traj = out.trajectories_per_replication;
    return c;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

/**
 * Criterion 1: independent-sampling Monte Carlo error decays like
 * N^{-1/2}.  Five ensemble sizes, 50 replications each; the log-log slope
 * of the mean lower-surface error must sit in [-0.6, -0.4] and the smallest
 * ensemble must land within a factor 2 of the recorded anchor 1.9889e-01.
 */
Outcome criterion_1() {
    const std::vector<std::int64_t> sizes{100, 200, 400, 800, 1600};
    std::vector<double> log_n, log_e, means, cis;
    for (const std::int64_t n : sizes) {
        RunConfig cfg = experiment_config(1.0 / 16.0,
                                          {{"sampling_mode", "iid"},
                                           {"n_traj", static_cast<double>(n)}});
        const CellResult c = run_cell(cfg);
        means.push_back(c.e0.mean);
        cis.push_back(c.e0.ci_halfwidth);
        log_n.push_back(std::log(static_cast<double>(n)));
        log_e.push_back(std::log(c.e0.mean));
    }
    {
        csv::Writer w((artifacts_dir() / "c1_results.csv").string(),
                      {"n_traj", "mean_e0", "ci_e0"});
        for (std::size_t i = 0; i < sizes.size(); ++i)
            w.row({csv::format(sizes[i]), csv::format(means[i]), csv::format(cis[i])});
    }
    const double slope = least_squares_slope(log_n, log_e);
    const bool slope_ok = slope >= -0.6 && slope <= -0.4;
    const bool anchor_ok = within_factor(means.front(), 1.9889e-01, 2.0);
    Outcome o;
    o.pass = slope_ok && anchor_ok;
    o.detail = "slope " + num(slope) + " vs [-0.6,-0.4]; mean e0 at N=100 " +
               num(means.front()) + " vs anchor 1.9889e-01 within 2x" +
               (anchor_ok ? "" : " VIOLATED");
    return o;
}

struct StudyRow {
    double eps = 0.0;
    int M = 0;
    ReplicationStats e0;
    std::int64_t n_traj = 0;
};

const std::vector<double> study_eps{1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0};
const std::vector<int> study_m{1, 2, 4, 8, 16};

/** One cell of the partition study; the tables run at dt = eps/8. */
StudyRow study_cell(double eps, int m, double dt_div = 8.0) {
    RunConfig cfg = experiment_config(eps, {{"dt", eps / dt_div},
                                            {"partition_m", m}});
    const CellResult c = run_cell(cfg);
    return {eps, m, c.e0, c.n_traj};
}

std::filesystem::path study_artifact() { return artifacts_dir() / "c2_results.csv"; }

std::vector<StudyRow> load_study_rows() {
    std::vector<StudyRow> rows;
    std::ifstream in(study_artifact());
    if (!in.good()) return rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 6) continue;
        StudyRow r;
        r.eps = std::stod(cells[0]);
        r.M = std::stoi(cells[1]);
        r.e0.mean = std::stod(cells[2]);
        r.e0.var = std::stod(cells[3]);
        r.e0.ci_halfwidth = std::stod(cells[4]);
        r.n_traj = std::stoll(cells[5]);
        rows.push_back(r);
    }
    return rows;
}

/**
 * Criterion 2: the stratified partition study.  For each epsilon the mean
 * error must fall with M at per-step rates in [0.2, 0.6]; one statistically
 * unresolved pair per table (overlapping replication CIs) is tolerated.
 * Two anchors pin the absolute scale, and the coarse step dt = eps/8 used
 * for the tables is validated against dt = eps/32 on one cell.
 */
Outcome criterion_2() {
    std::vector<StudyRow> rows;
    for (const double eps : study_eps)
        for (const int m : study_m) rows.push_back(study_cell(eps, m));
    {
        csv::Writer w(study_artifact().string(),
                      {"eps", "M", "mean_e0", "var_e0", "ci_e0", "n_traj"});
        for (const StudyRow& r : rows)
            w.row({csv::format(r.eps), csv::format(static_cast<std::int64_t>(r.M)),
                   csv::format(r.e0.mean), csv::format(r.e0.var),
                   csv::format(r.e0.ci_halfwidth), csv::format(r.n_traj)});
    }

    bool tables_ok = true;
    double worst_rate_lo = 1e300, worst_rate_hi = -1e300;
    int excused = 0;
    std::string table_note;
    for (std::size_t t = 0; t < study_eps.size(); ++t) {
        const StudyRow* tab = rows.data() + t * study_m.size();
        int bad = 0;
        bool bad_excusable = true;
        for (std::size_t i = 0; i + 1 < study_m.size(); ++i) {
            const double rate = convergence_rate(
                tab[i].e0.mean, tab[i + 1].e0.mean,
                static_cast<double>(tab[i].M), static_cast<double>(tab[i + 1].M));
            worst_rate_lo = std::min(worst_rate_lo, rate);
            worst_rate_hi = std::max(worst_rate_hi, rate);
            if (rate < 0.2 || rate > 0.6) {
                ++bad;
                const bool overlap =
                    std::fabs(tab[i].e0.mean - tab[i + 1].e0.mean) <=
                    tab[i].e0.ci_halfwidth + tab[i + 1].e0.ci_halfwidth;
                if (!overlap) bad_excusable = false;
            }
        }
        excused += bad;
        if (bad > 1 || !bad_excusable) {
            tables_ok = false;
            table_note += " table eps=" + num(study_eps[t]) + " has " +
                          std::to_string(bad) + " bad pair(s)";
        }
    }

    const StudyRow& a64 = rows[2 * study_m.size() + 4];
    const StudyRow& a16 = rows[0];
    const bool anchor64_ok = within_factor(a64.e0.mean, 1.6811e-02, 2.0);
    const bool anchor16_ok = within_factor(a16.e0.mean, 6.9485e-02, 2.0);

    const StudyRow fine = study_cell(1.0 / 16.0, 16, 32.0);
    const StudyRow& coarse = rows[4];
    const bool dt_ok = std::fabs(fine.e0.mean - coarse.e0.mean) <=
                       fine.e0.ci_halfwidth + coarse.e0.ci_halfwidth;

    Outcome o;
    o.pass = tables_ok && anchor64_ok && anchor16_ok && dt_ok;
    o.detail = "rates in [" + num(worst_rate_lo) + "," + num(worst_rate_hi) +
               "] vs [0.2,0.6] with " + std::to_string(excused) +
               " CI-overlap exception(s);" + table_note +
               " eps=1/64 M=16 mean " + num(a64.e0.mean) +
               " vs 1.6811e-02; M=1 mean " + num(a16.e0.mean) +
               " vs 6.9485e-02; dt refinement shift " +
               num(std::fabs(fine.e0.mean - coarse.e0.mean)) + " vs CI sum " +
               num(fine.e0.ci_halfwidth + coarse.e0.ci_halfwidth) +
               (dt_ok ? "" : " VIOLATED");
    return o;
}

/**
 * Criterion 3: at M = 16 the mean error must decrease monotonically as
 * epsilon halves across {1/16, 1/32, 1/64}.  Reuses the criterion 2 study
 * when its artifact exists; otherwise recomputes just the three cells.
 */
Outcome criterion_3() {
    std::vector<StudyRow> rows = load_study_rows();
    std::vector<double> m16;
    for (const double eps : study_eps) {
        const auto it = std::find_if(rows.begin(), rows.end(), [eps](const StudyRow& r) {
            return r.M == 16 && std::fabs(r.eps - eps) < 1e-12;
        });
        if (it != rows.end()) {
            m16.push_back(it->e0.mean);
        } else {
            m16.push_back(study_cell(eps, 16).e0.mean);
        }
    }
    Outcome o;
    o.pass = m16[0] > m16[1] && m16[1] > m16[2];
    o.detail = "mean e0 at M=16: " + num(m16[0]) + " > " + num(m16[1]) + " > " +
               num(m16[2]) + " expected (recorded 2.63e-02, 2.01e-02, 1.68e-02)";
    return o;
}

/**
 * Criterion 4: quadrature reconstruction of the initial datum on the
 * default meshes at eps = 1/16 must land within a factor 3 of the recorded
 * initial error 8.3178e-05.
 */
Outcome criterion_4() {
    const RunConfig cfg = experiment_config(1.0 / 16.0);
    const GaussianPacket packet = GaussianPacket::make(cfg.q0, cfg.p0, cfg.alpha,
                                                       cfg.epsilon, cfg.scaled_norm);
    const InitialAmplitudeField field = initial_amplitude(
        packet, cfg.epsilon, cfg.phase_mesh(), cfg.x_min, cfg.x_max, cfg.dy);
    const XMesh x_mesh = cfg.x_mesh();
    const WaveField recon = reconstruct_initial(field, x_mesh);
    double acc = 0.0;
    for (int j = 0; j < x_mesh.n; ++j)
        acc += std::norm(recon.u0[j] - packet(x_mesh.x(j))) + std::norm(recon.u1[j]);
    const double eps_in = std::sqrt(acc * x_mesh.dx);
    Outcome o;
    o.pass = within_factor(eps_in, 8.3178e-05, 3.0);
    o.detail = "eps_in " + num(eps_in) + " vs anchor 8.3178e-05 within 3x";
    return o;
}

/**
 * Criterion 5: with zero coupling and a quadratic lower surface the beam
 * ansatz is exact, so the assembled field must match the spectral reference
 * to 1e-3 in L2 at t = 1 (residual is quadrature plus time stepping only).
 */
Outcome criterion_5() {
    const double eps = 1.0 / 16.0;
    const double dt = eps / 32.0;
    const double t_final = 1.0;
    const testing::HarmonicDiabatic model{};
    const RunConfig cfg = experiment_config(eps);
    const GaussianPacket packet = GaussianPacket::make(cfg.q0, cfg.p0, cfg.alpha,
                                                       eps, true);
    const InitialAmplitudeField field = initial_amplitude(
        packet, eps, cfg.phase_mesh(), cfg.x_min, cfg.x_max, cfg.dy);
    const PartitionPlan plan = build_partition(field, 16, cfg.amplitude_floor);

    const XMesh x_mesh = cfg.x_mesh();
    WaveField fga = WaveField::zeros(x_mesh, eps);
    std::int64_t g = 0;
    for (const PlanEntry& e : plan.entries) {
        for (int k = 0; k < e.copies; ++k, ++g) {
            TrajectoryState s;
            s.Q = e.q;
            s.P = e.p;
            s.A = PartitionPlan::copy_amplitude(e, k);
            rng::Stream stream(rng::substream(1, rng::purpose_trajectory, 0,
                                              static_cast<std::uint64_t>(g)));
            evolve(model, s, t_final, dt, stream);
            scatter_beam(s.surface == 0 ? fga.u0 : fga.u1, x_mesh, eps, s.Q, s.P,
                         s.S, beam_prefactor(s, plan.copy_weight(), {}));
        }
    }

    const XMesh fine_mesh = XMesh::make(cfg.x_min, cfg.x_max, cfg.dx / 2.0);
    std::string tag = "HarmonicZeroCoupling";
    for (double v : {eps, cfg.q0, cfg.p0, cfg.alpha}) tag += ":" + csv::format(v);
    const std::vector<WaveField> ref = reference_solve(
        model, packet, fine_mesh, eps, dt, {t_final}, tag, shared_cache_dir());
    WaveField ref_run = WaveField::zeros(x_mesh, eps);
    for (int j = 0; j < x_mesh.n; ++j) {
        ref_run.u0[j] = ref[0].u0[static_cast<std::size_t>(j) * 2];
        ref_run.u1[j] = ref[0].u1[static_cast<std::size_t>(j) * 2];
    }
    const ComponentErrors e = l2_error(fga, ref_run);
    Outcome o;
    o.pass = e.e0 <= 1e-3;
    o.detail = "harmonic zero-coupling L2 error e0 " + num(e.e0) +
               " vs 1e-3 (e1 " + num(e.e1) + ")";
    return o;
}

/**
 * Criterion 6: free-particle amplitude has the closed form
 * A(t) = A(0) ((2 - i t)/2)^{1/2}; RK4 at dt = 1e-3 must match to 1e-8.
 */
Outcome criterion_6() {
    const testing::FreeParticle model{};
    TrajectoryState s;
    s.Q = 0.0;
    s.P = 0.7;
    const double dt = 1e-3;
    for (int i = 0; i < 1000; ++i) rk4_step(model, s, dt);
    const cplx expected = std::pow(cplx(2.0, -s.t) / 2.0, 0.5);
    const double err = std::abs(s.A - expected);
    Outcome o;
    o.pass = err <= 1e-8;
    o.detail = "free-particle amplitude error " + num(err) + " vs 1e-8 at t=" +
               num(s.t);
    return o;
}

/**
 * Criterion 7: the variational Jacobian of every evolved trajectory stays
 * symplectic to 1e-6 at t = 1 (for one degree of freedom the deviation norm
 * is exactly |det J - 1|), over a 100-trajectory ensemble that must contain
 * multi-hop members.
 */
Outcome criterion_7() {
    const double eps = 1.0 / 16.0;
    const RunConfig cfg = experiment_config(eps);
    const ModelPotential model(cfg.model, cfg.delta);
    const GaussianPacket packet = GaussianPacket::make(cfg.q0, cfg.p0, cfg.alpha,
                                                       eps, true);
    const InitialAmplitudeField field = initial_amplitude(
        packet, eps, cfg.phase_mesh(), cfg.x_min, cfg.x_max, cfg.dy);
    const IidSampler sampler(field, cfg.amplitude_floor);
    rng::Stream pick(rng::substream(1, rng::purpose_sampling, 0, 0));

    double max_defect = 0.0;
    int multi_hop = 0;
    for (int g = 0; g < 100; ++g) {
        const std::size_t node = sampler.draw(pick);
        TrajectoryState s;
        s.Q = field.mesh.q(static_cast<int>(node) / field.mesh.np);
        s.P = field.mesh.p(static_cast<int>(node) % field.mesh.np);
        rng::Stream stream(rng::substream(1, rng::purpose_trajectory, 0,
                                          static_cast<std::uint64_t>(g)));
        evolve(model, s, 1.0, eps / 32.0, stream);
        max_defect = std::max(max_defect, symplectic_defect(s));
        if (s.hop_times.size() >= 2) ++multi_hop;
    }
    Outcome o;
    o.pass = max_defect <= 1e-6 && multi_hop >= 1;
    o.detail = "max |det J - 1| " + num(max_defect) + " vs 1e-6 over 100 trajectories, " +
               std::to_string(multi_hop) + " with >= 2 hops";
    return o;
}

/**
 * Criterion 8: with a constant jump intensity the hop process is Poisson.
 * 1e5 trajectories at lambda = 0.5, t = 2: the hop-count histogram passes a
 * chi-square test against Poisson(1) at the 1% level and the first-hop times
 * pass a KS test against the conditioned exponential law at 1%.
 */
Outcome criterion_8() {
    const testing::ConstantRateModel model{};
    const double lambda = 0.5, t_final = 2.0, dt = 1e-3;
    const int n = 100000;

    std::vector<std::int64_t> counts(7, 0);
    std::vector<double> first_hops;
    first_hops.reserve(static_cast<std::size_t>(n));
    for (int g = 0; g < n; ++g) {
        TrajectoryState s;
        s.P = 1.0;
        rng::Stream stream(rng::substream(1, rng::purpose_synthetic, 0,
                                          static_cast<std::uint64_t>(g)));
        evolve(model, s, t_final, dt, stream);
        const std::size_t k = s.hop_times.size();
        ++counts[std::min<std::size_t>(k, 6)];
        if (k >= 1) first_hops.push_back(s.hop_times.front());
    }

    const double mean_hops = lambda * t_final;
    double chi2 = 0.0, p_acc = 0.0, p_k = std::exp(-mean_hops);
    for (int k = 0; k <= 5; ++k) {
        const double expect = n * p_k;
        chi2 += (counts[k] - expect) * (counts[k] - expect) / expect;
        p_acc += p_k;
        p_k *= mean_hops / (k + 1);
    }
    const double tail_expect = n * (1.0 - p_acc);
    chi2 += (counts[6] - tail_expect) * (counts[6] - tail_expect) / tail_expect;
    const double chi2_crit = 16.812;  // 1% upper tail, 6 degrees of freedom

    std::sort(first_hops.begin(), first_hops.end());
    const double nh = static_cast<double>(first_hops.size());
    const double denom = 1.0 - std::exp(-lambda * t_final);
    double ks = 0.0;
    for (std::size_t i = 0; i < first_hops.size(); ++i) {
        const double f = (1.0 - std::exp(-lambda * first_hops[i])) / denom;
        ks = std::max(ks, std::max((i + 1) / nh - f, f - i / nh));
    }
    const double ks_crit = 1.628 / std::sqrt(nh);  // 1% level, large sample

    Outcome o;
    o.pass = chi2 <= chi2_crit && ks <= ks_crit;
    o.detail = "chi2 " + num(chi2) + " vs " + num(chi2_crit) + "; KS " + num(ks) +
               " vs " + num(ks_crit) + " (n=" + std::to_string(first_hops.size()) + ")";
    return o;
}

/**
 * Criterion 9: with the coupling scaled by 0.1 the two-hop truncation of the
 * jump expansion is a deterministic oracle; the Monte Carlo mean field over
 * 16 replications must agree with it within 3 aggregated standard errors.
 */
Outcome criterion_9() {
    const double eps = 1.0 / 16.0;
    const double t_final = 0.5;
    const double dt = t_final / 64.0;
    const int reps = 16;
    const ModelPotential base(ModelKind::SimpleAvoided, eps);
    const testing::ScaledCoupling<ModelPotential> model{base, 0.1};

    const GaussianPacket packet = GaussianPacket::make(-1.0, 2.0, 16.0, eps, true);
    const PhaseSpaceMesh mesh = PhaseSpaceMesh::make(-pi, pi, 2.0 * pi * eps / 4.0,
                                                     0.5, 3.5, 3.0 * eps / 2.0);
    const XMesh x_mesh = XMesh::make(-pi, pi, 2.0 * pi * eps / 32.0);
    const InitialAmplitudeField field =
        initial_amplitude(packet, eps, mesh, -pi, pi, 2.0 * pi * eps / 32.0);

    const WaveField oracle =
        brute_force_series_oracle(model, field, x_mesh, t_final, dt, 2, 1e-3);

    const PartitionPlan plan = build_partition(field, 4, 1e-3);
    std::vector<WaveField> fields;
    for (int rep = 0; rep < reps; ++rep) {
        WaveField f = WaveField::zeros(x_mesh, eps);
        std::int64_t g = 0;
        for (const PlanEntry& e : plan.entries) {
            for (int k = 0; k < e.copies; ++k, ++g) {
                TrajectoryState s;
                s.Q = e.q;
                s.P = e.p;
                s.A = PartitionPlan::copy_amplitude(e, k);
                rng::Stream stream(rng::substream(
                    1, rng::purpose_trajectory, static_cast<std::uint64_t>(rep),
                    static_cast<std::uint64_t>(g)));
                evolve(model, s, t_final, dt, stream);
                scatter_beam(s.surface == 0 ? f.u0 : f.u1, x_mesh, eps, s.Q, s.P,
                             s.S, beam_prefactor(s, plan.copy_weight(), {}));
            }
        }
        fields.push_back(std::move(f));
    }

    WaveField mean = WaveField::zeros(x_mesh, eps);
    for (const WaveField& f : fields)
        for (int j = 0; j < x_mesh.n; ++j) {
            mean.u0[j] += f.u0[j];
            mean.u1[j] += f.u1[j];
        }
    for (int j = 0; j < x_mesh.n; ++j) {
        mean.u0[j] /= static_cast<double>(reps);
        mean.u1[j] /= static_cast<double>(reps);
    }

    // Aggregate L2 comparison: a nodewise 3 sigma test would false-fail a
    // fraction 3e-3 of the hundreds of mesh nodes by chance alone.
    double dist2 = 0.0, sigma2 = 0.0;
    for (int j = 0; j < x_mesh.n; ++j) {
        dist2 += std::norm(mean.u0[j] - oracle.u0[j]) +
                 std::norm(mean.u1[j] - oracle.u1[j]);
        double se = 0.0;
        for (const WaveField& f : fields)
            se += std::norm(f.u0[j] - mean.u0[j]) + std::norm(f.u1[j] - mean.u1[j]);
        sigma2 += se / (static_cast<double>(reps) * (reps - 1));
    }
    const double dist = std::sqrt(dist2 * x_mesh.dx);
    const double sigma = std::sqrt(sigma2 * x_mesh.dx);

    Outcome o;
    o.pass = dist <= 3.0 * sigma;
    o.detail = "field distance to two-hop oracle " + num(dist) + " vs 3 sigma " +
               num(3.0 * sigma);
    return o;
}

/**
 * Criterion 10: dropping the exponential survival weighting must at least
 * double the final error on the fixed-gap linear model at eps = 1/16
 * (paired runs, identical trajectories, weights toggled at assembly).
 */
Outcome criterion_10() {
    const json base = {{"model", "FixedGapLinear"},
                       {"scaled_norm", false},
                       {"replications", 4}};
    json with = base, without = base;
    without["disable_weights"] = true;
    const CellResult weighted = run_cell(experiment_config(1.0 / 16.0, with));
    const CellResult ablated = run_cell(experiment_config(1.0 / 16.0, without));
    Outcome o;
    o.pass = ablated.e0.mean >= 2.0 * weighted.e0.mean;
    o.detail = "e0 without weights " + num(ablated.e0.mean) + " vs 2x weighted " +
               num(2.0 * weighted.e0.mean);
    return o;
}

/**
 * Criterion 11: the transition-rate curve of a 6400-trajectory independent
 * ensemble tracks the reference rate within 0.05 at every checkpoint
 * t = k/32 up to t = 1.5.  The spatial box is widened to [-2 pi, 2 pi]
 * because trajectories travel to x ~ 4.3 by the final time.
 */
Outcome criterion_11() {
    RunConfig cfg = experiment_config(1.0 / 16.0,
                                      {{"x_min", -2.0 * pi},
                                       {"x_max", 2.0 * pi},
                                       {"t_final", 1.5},
                                       {"checkpoint_every", 1.0 / 32.0},
                                       {"sampling_mode", "iid"},
                                       {"n_traj", 6400.0},
                                       {"replications", 8}});
    Runner runner(cfg);
    const RunOutputs out = runner.run();
    double max_dev = 0.0, at_t = 0.0;
    for (std::size_t c = 0; c < out.checkpoint_times.size(); ++c) {
        const double mean_rate = replication_stats(out.rates[c]).mean;
        const double dev = std::fabs(mean_rate - out.reference_rates[c]);
        if (dev > max_dev) {
            max_dev = dev;
            at_t = out.checkpoint_times[c];
        }
    }
    Outcome o;
    o.pass = max_dev <= 0.05;
    o.detail = "max rate deviation " + num(max_dev) + " vs 0.05 (at t=" +
               num(at_t) + " of " + std::to_string(out.checkpoint_times.size()) +
               " checkpoints)";
    return o;
}

/**
 * Criterion 12: adiabatic limit on the fixed-gap linear model at
 * eps = 1/128, M = 16: the final transition rate stays below 0.05 and within
 * 0.02 of the reference rate.
 */
Outcome criterion_12() {
    RunConfig cfg = experiment_config(1.0 / 128.0,
                                      {{"model", "FixedGapLinear"},
                                       {"scaled_norm", false},
                                       {"replications", 2}});
    Runner runner(cfg);
    const RunOutputs out = runner.run();
    const double rate = transition_rate(out.mean_fields.back());
    const double ref = out.reference_rates.back();
    Outcome o;
    o.pass = rate <= 0.05 && std::fabs(rate - ref) <= 0.02;
    o.detail = "final rate " + num(rate) + " vs 0.05, reference " + num(ref) +
               ", gap " + num(std::fabs(rate - ref)) + " vs 0.02";
    return o;
}

int run_command(const std::string& cmd) {
    const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::optional<std::string> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in.good()) return std::nullopt;
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/**
 * Criterion 13: repeated runs of the same configuration through the CLI are
 * byte-identical, including across worker counts and across a cold versus
 * warm reference cache.
 */
Outcome criterion_13() {
    const std::string cli = env_or("FGASH_CLI", "");
    Outcome o;
    if (cli.empty()) {
        o.detail = "FGASH_CLI is not set";
        return o;
    }
    const std::filesystem::path dir = artifacts_dir() / "c13";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    const std::filesystem::path cfg_path = dir / "config.json";
    {
        json j = {{"epsilon", 0.0625},
                  {"t_final", 0.25},
                  {"partition_m", 2},
                  {"replications", 2},
                  {"cache_dir", (dir / "cache").string()}};
        std::ofstream out(cfg_path);
        out << j.dump(2) << "\n";
    }

    const std::vector<std::pair<std::string, std::string>> runs = {
        {"a", ""}, {"b", ""}, {"c", " --workers 2"}, {"d", ""}};
    for (const auto& [name, extra] : runs) {
        const int rc = run_command('"' + cli + "\" run-fga --config \"" +
                                   cfg_path.string() + "\" --out-dir \"" +
                                   (dir / name).string() + '"' + extra);
        if (rc != 0) {
            o.detail = "run " + name + " exited with code " + std::to_string(rc);
            return o;
        }
    }

    const std::vector<std::string> files = {"field_final.csv", "replications.csv",
                                            "summary.csv"};
    for (const std::string& f : files) {
        const auto base = slurp(dir / "a" / f);
        if (!base) {
            o.detail = "missing output file " + f;
            return o;
        }
        for (const std::string& other : {std::string("b"), std::string("c"),
                                         std::string("d")}) {
            if (slurp(dir / other / f) != base) {
                o.detail = f + " differs between runs a and " + other;
                return o;
            }
        }
    }
    o.pass = true;
    o.detail = "4 runs byte-identical across rerun, worker count and warm cache";
    return o;
}

using CriterionFn = Outcome (*)();
const std::vector<CriterionFn> criteria = {
    criterion_1, criterion_2, criterion_3,  criterion_4,  criterion_5,
    criterion_6, criterion_7, criterion_8,  criterion_9,  criterion_10,
    criterion_11, criterion_12, criterion_13};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    const std::string arg = argc > 1 ? argv[1] : "all";
    if (arg == "all") {
        for (int k = 1; k <= static_cast<int>(criteria.size()); ++k)
            selected.push_back(k);
    } else {
        try {
            const int k = std::stoi(arg);
            if (k < 1 || k > static_cast<int>(criteria.size())) throw std::out_of_range(arg);
            selected.push_back(k);
        } catch (const std::exception&) {
            std::cerr << "usage: acceptance [1.." << criteria.size() << "|all]\n";
            return 2;
        }
    }

    bool all_pass = true;
    for (const int k : selected) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[static_cast<std::size_t>(k - 1)]();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
        std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL")
                  << " (" << o.detail << ") [" << std::fixed
                  << std::setprecision(1) << secs << "s]" << std::endl;
        std::cout.unsetf(std::ios::floatfield);
        if (!o.pass) all_pass = false;
    }
    return all_pass ? 0 : 1;
}

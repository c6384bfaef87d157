/**
 * Batch experiment driver: parses a JSON run configuration, orchestrates
 * sampling, stochastic ensemble evolution, assembly and statistics, and
 * emits table and figure data as CSV.
 *
 * Exit codes: 0 success, 2 configuration error, 3 numerical abort.
 */

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fgash/runner.hpp"

namespace fs = std::filesystem;
using namespace fgash;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir_override;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> workers_override;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", args.out_dir_override, "output directory override");
    cmd->add_option("--seed", args.seed_override, "master seed override");
    cmd->add_option("--workers", args.workers_override,
                    "worker thread count override (0 = hardware)");
}

RunConfig load_with_overrides(const CommonArgs& args) {
    RunConfig cfg = load_config(args.config_path);
    if (!args.out_dir_override.empty()) cfg.out_dir = args.out_dir_override;
    if (args.seed_override) cfg.seed = *args.seed_override;
    if (args.workers_override) cfg.workers = *args.workers_override;
    return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return (fs::path(cfg.out_dir) / name).string();
}

void write_summary(const RunConfig& cfg, const Runner& runner,
                   const RunOutputs& out) {
    csv::Writer w(out_path(cfg, "summary.csv"), {"key", "value"});
    const auto kv = [&w](const std::string& k, const std::string& v) {
        w.row({k, v});
    };
    kv("model", to_string(cfg.model));
    kv("delta", csv::format(cfg.delta));
    kv("epsilon", csv::format(cfg.epsilon));
    kv("t_final", csv::format(cfg.t_final));
    kv("dt", csv::format(cfg.dt));
    kv("sampling_mode",
       cfg.sampling_mode == SamplingMode::stratified ? "stratified" : "iid");
    if (cfg.sampling_mode == SamplingMode::stratified)
        kv("partition_m", csv::format(static_cast<std::int64_t>(cfg.partition_m)));
    else
        kv("n_traj", csv::format(cfg.n_traj));
    kv("replications", csv::format(static_cast<std::int64_t>(cfg.replications)));
    kv("trajectories_per_replication",
       csv::format(out.trajectories_per_replication));
    kv("eps_in", csv::format(out.eps_in));

    if (!out.e0_final.empty()) {
        const ReplicationStats s0 = replication_stats(out.e0_final);
        const ReplicationStats s1 = replication_stats(out.e1_final);
        kv("mean_e0", csv::format(s0.mean));
        kv("var_e0", csv::format(s0.var));
        kv("ci_e0", csv::format(s0.ci_halfwidth));
        kv("mean_e1", csv::format(s1.mean));
        kv("var_e1", csv::format(s1.var));
        kv("ci_e1", csv::format(s1.ci_halfwidth));
    }
    const ReplicationStats sr = replication_stats(out.rates.back());
    kv("mean_rate_final", csv::format(sr.mean));
    kv("ci_rate_final", csv::format(sr.ci_halfwidth));
    if (!out.reference_rates.empty())
        kv("reference_rate_final", csv::format(out.reference_rates.back()));

    const EnsembleDiagnostics& d = out.diagnostics;
    kv("trajectories_total", csv::format(d.trajectories));
    kv("hops_total", csv::format(d.total_hops));
    kv("significant_hops", csv::format(d.significant_hops));
    kv("significant_hops_outside", csv::format(d.significant_hops_outside));
    kv("multi_hop_trajectories", csv::format(d.multi_hop_trajectories));
    kv("max_hops_single_trajectory", csv::format(d.max_hops_single));
    kv("max_symplectic_defect", csv::format(d.max_symplectic_defect));
    kv("max_step_hop_prob", csv::format(d.max_step_hop_prob));
}

int cmd_run_fga(const CommonArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    Runner runner(cfg);
    const RunOutputs out = runner.run();

    detail::write_field_csv(out_path(cfg, "field_final.csv"),
                            out.mean_fields.back());

    {
        csv::Writer w(out_path(cfg, "replications.csv"),
                      {"replication", "e0", "e1", "rate"});
        for (int r = 0; r < cfg.replications; ++r) {
            const bool have_err = !out.e0_final.empty();
            w.row({csv::format(static_cast<std::int64_t>(r)),
                   have_err ? csv::format(out.e0_final[r]) : "",
                   have_err ? csv::format(out.e1_final[r]) : "",
                   csv::format(out.rates.back()[r])});
        }
    }
    write_summary(cfg, runner, out);
    return 0;
}

int cmd_run_reference(const CommonArgs& args) {
    RunConfig cfg = load_with_overrides(args);
    cfg.cache_dir = resolve_cache_dir(cfg);
    const ModelPotential model(cfg.model, cfg.delta);
    validate_config(cfg, model);
    const GaussianPacket packet = GaussianPacket::make(
        cfg.q0, cfg.p0, cfg.alpha, cfg.epsilon, cfg.scaled_norm);

    std::vector<double> times;
    if (cfg.checkpoint_every > 0.0) {
        const int c = detail::step_count(0.0, cfg.t_final, cfg.checkpoint_every);
        for (int k = 1; k <= c; ++k) times.push_back(k * cfg.checkpoint_every);
    } else {
        times.push_back(cfg.t_final);
    }
    const std::vector<WaveField> fields =
        reference_solve(model, packet, cfg.reference_mesh(), cfg.epsilon,
                        cfg.ref_dt, times, reference_cache_tag(cfg),
                        cfg.cache_dir);

    detail::write_field_csv(out_path(cfg, "reference_final.csv"), fields.back());
    csv::Writer w(out_path(cfg, "reference_rates.csv"), {"t", "rate_ref"});
    for (std::size_t i = 0; i < times.size(); ++i)
        w.row({csv::format(times[i]), csv::format(transition_rate(fields[i]))});
    return 0;
}

int cmd_transition_curve(const CommonArgs& args) {
    RunConfig cfg = load_with_overrides(args);
    detail::require<ConfigError>(
        cfg.checkpoint_every > 0.0,
        "transition-curve requires checkpoint_every > 0");
    cfg.with_reference = true;
    Runner runner(cfg);
    const RunOutputs out = runner.run();

    const WaveField recon =
        reconstruct_initial(runner.amplitude_field(), cfg.x_mesh());
    const std::vector<WaveField> ref0 = reference_solve(
        runner.model(), runner.packet(), cfg.reference_mesh(), cfg.epsilon,
        cfg.ref_dt, {0.0}, runner.cache_tag(), runner.config().cache_dir);

    csv::Writer w(out_path(cfg, "rates.csv"), {"t", "rate_fga", "rate_ref"});
    w.row({csv::format(0.0), csv::format(transition_rate(recon)),
           csv::format(transition_rate(ref0[0]))});
    for (std::size_t c = 0; c < out.checkpoint_times.size(); ++c) {
        const ReplicationStats s = replication_stats(out.rates[c]);
        w.row({csv::format(out.checkpoint_times[c]), csv::format(s.mean),
               csv::format(out.reference_rates[c])});
    }
    write_summary(cfg, runner, out);
    return 0;
}

int cmd_inspect_model(const std::string& model_name, double delta, double x_min,
                      double x_max, int n, const std::string& out_file) {
    detail::require<ConfigError>(n >= 2, "inspect-model needs at least 2 points");
    detail::require<ConfigError>(x_max > x_min, "inspect-model needs x_max > x_min");
    const ModelPotential model(model_kind_from_string(model_name), delta);
    csv::Writer w(out_file, {"x", "E0", "E1", "d01", "D01"});
    std::optional<std::pair<Vec2, Vec2>> anchor;
    const double dx = (x_max - x_min) / (n - 1);
    for (int j = 0; j < n; ++j) {
        const double x = x_min + j * dx;
        const AdiabaticData ad = adiabatic_decompose(model, x, anchor);
        anchor = std::make_pair(ad.psi0, ad.psi1);
        w.row({csv::format(x), csv::format(ad.E0), csv::format(ad.E1),
               csv::format(ad.d01), csv::format(ad.D01)});
    }
    return 0;
}

int cmd_sample_init(const CommonArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    const ModelPotential model(cfg.model, cfg.delta);
    validate_config(cfg, model);
    const GaussianPacket packet = GaussianPacket::make(
        cfg.q0, cfg.p0, cfg.alpha, cfg.epsilon, cfg.scaled_norm);
    const InitialAmplitudeField field = initial_amplitude(
        packet, cfg.epsilon, cfg.phase_mesh(), cfg.x_min, cfg.x_max, cfg.dy);

    {
        csv::Writer w(out_path(cfg, "amplitude.csv"),
                      {"q", "p", "re_A", "im_A", "abs_A"});
        for (int i = 0; i < field.mesh.nq; ++i)
            for (int k = 0; k < field.mesh.np; ++k) {
                const cplx a =
                    field.A[static_cast<std::size_t>(i) * field.mesh.np + k];
                w.row({csv::format(field.mesh.q(i)), csv::format(field.mesh.p(k)),
                       csv::format(a.real()), csv::format(a.imag()),
                       csv::format(std::abs(a))});
            }
    }

    const XMesh x_mesh = cfg.x_mesh();
    const WaveField recon = reconstruct_initial(field, x_mesh);
    double acc = 0.0;
    for (int j = 0; j < x_mesh.n; ++j)
        acc += std::norm(recon.u0[j] - packet(x_mesh.x(j))) + std::norm(recon.u1[j]);
    const double eps_in = std::sqrt(acc * x_mesh.dx);

    csv::Writer w(out_path(cfg, "init_summary.csv"), {"key", "value"});
    w.row({"max_abs", csv::format(field.max_abs)});
    w.row({"abs_sum", csv::format(field.abs_sum())});
    w.row({"eps_in", csv::format(eps_in)});
    if (cfg.sampling_mode == SamplingMode::stratified) {
        const PartitionPlan plan =
            build_partition(field, cfg.partition_m, cfg.amplitude_floor);
        w.row({"total_copies", csv::format(plan.total_copies)});
        w.row({"d_M", csv::format(plan.d_M)});
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-level semiclassical wavepacket simulator"};
    app.require_subcommand(1);

    CommonArgs fga_args, ref_args, curve_args, init_args;
    std::string im_model = "SimpleAvoided", im_out = "model.csv";
    double im_delta = 0.0625, im_xmin = -2.0, im_xmax = 2.0;
    int im_n = 401;

    add_common(app.add_subcommand("run-fga",
                                  "stochastic ensemble run with statistics"),
               fga_args);
    add_common(app.add_subcommand("run-reference",
                                  "spectral reference solve only"),
               ref_args);
    add_common(app.add_subcommand("transition-curve",
                                  "transition rate versus time against the reference"),
               curve_args);
    add_common(app.add_subcommand("sample-init",
                                  "dump the initial amplitude field"),
               init_args);

    CLI::App* im = app.add_subcommand(
        "inspect-model", "dump surfaces and couplings over an x grid");
    im->add_option("--model", im_model, "model name");
    im->add_option("--delta", im_delta, "gap parameter");
    im->add_option("--x-min", im_xmin, "grid start");
    im->add_option("--x-max", im_xmax, "grid end");
    im->add_option("--points", im_n, "number of grid points");
    im->add_option("--out", im_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand("run-fga")) return cmd_run_fga(fga_args);
        if (app.got_subcommand("run-reference")) return cmd_run_reference(ref_args);
        if (app.got_subcommand("transition-curve"))
            return cmd_transition_curve(curve_args);
        if (app.got_subcommand("sample-init")) return cmd_sample_init(init_args);
        if (app.got_subcommand("inspect-model"))
            return cmd_inspect_model(im_model, im_delta, im_xmin, im_xmax, im_n,
                                     im_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return 3;
    }
    return 0;
}

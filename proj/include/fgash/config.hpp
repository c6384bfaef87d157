#ifndef FGASH_CONFIG_HPP
#define FGASH_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

#include "fgash/errors.hpp"
#include "fgash/mesh.hpp"
#include "fgash/models.hpp"
#include "fgash/types.hpp"

namespace fgash {

enum class SamplingMode { stratified, iid };

/**
 * One simulation setup.  Anything not given in the JSON file falls back to
 * the semiclassical defaults tied to epsilon: dt = eps/32, dq = 2 pi eps / 8,
 * dp = 3 eps / 4, dx = dy = 2 pi eps / 32, reference dx half of dx, and
 * delta = eps.
 */
struct RunConfig {
    ModelKind model = ModelKind::SimpleAvoided;
    double delta = 0.0;
    double epsilon = 1.0 / 16.0;

    double q0 = -1.0;
    double p0 = 2.0;
    double alpha = 16.0;
    bool scaled_norm = true;
    int initial_surface = 0;

    double t_final = 1.0;
    double dt = 0.0;

    double q_min = -pi, q_max = pi;
    double p_min = 0.5, p_max = 3.5;
    double dq = 0.0, dp = 0.0;

    double x_min = -pi, x_max = pi;
    double dx = 0.0, dy = 0.0;

    SamplingMode sampling_mode = SamplingMode::stratified;
    int partition_m = 16;
    std::int64_t n_traj = 6400;
    double amplitude_floor = 1e-8;

    int replications = 50;
    std::uint64_t seed = 1;
    int workers = 0;
    bool exact_thinning = false;
    bool disable_weights = false;

    double checkpoint_every = 0.0;

    bool with_reference = true;
    double ref_dx = 0.0;
    double ref_dt = 0.0;
    std::string cache_dir;

    std::string out_dir = "out";

    PhaseSpaceMesh phase_mesh() const {
        return PhaseSpaceMesh::make(q_min, q_max, dq, p_min, p_max, dp);
    }
    XMesh x_mesh() const { return XMesh::make(x_min, x_max, dx); }
    XMesh reference_mesh() const { return XMesh::make(x_min, x_max, ref_dx); }
};

namespace detail {

inline double json_num(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    require<ConfigError>(j[key].is_number(), std::string("config key must be numeric: ") + key);
    return j[key].get<double>();
}

inline bool json_bool(const nlohmann::json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    require<ConfigError>(j[key].is_boolean(), std::string("config key must be boolean: ") + key);
    return j[key].get<bool>();
}

inline std::string json_str(const nlohmann::json& j, const char* key,
                            const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    require<ConfigError>(j[key].is_string(), std::string("config key must be a string: ") + key);
    return j[key].get<std::string>();
}

} // namespace detail

/** Parse a config; unknown keys are rejected so typos cannot silently no-op. */
inline RunConfig parse_config(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "model", "delta", "epsilon", "q0", "p0", "alpha", "scaled_norm",
        "initial_surface", "t_final", "dt", "q_min", "q_max", "p_min", "p_max",
        "dq", "dp", "x_min", "x_max", "dx", "dy", "sampling_mode",
        "partition_m", "n_traj", "amplitude_floor", "replications", "seed",
        "workers", "exact_thinning", "disable_weights", "checkpoint_every",
        "with_reference", "ref_dx", "ref_dt", "cache_dir", "out_dir"};
    detail::require<ConfigError>(j.is_object(), "config root must be a JSON object");
    for (const auto& item : j.items())
        detail::require<ConfigError>(known.count(item.key()) > 0,
                                     "unknown config key: " + item.key());

    RunConfig c;
    c.model = model_kind_from_string(detail::json_str(j, "model", "SimpleAvoided"));
    c.epsilon = detail::json_num(j, "epsilon", c.epsilon);
    c.delta = detail::json_num(j, "delta", c.epsilon);

    c.q0 = detail::json_num(j, "q0", c.q0);
    c.p0 = detail::json_num(j, "p0", c.p0);
    c.alpha = detail::json_num(j, "alpha", c.alpha);
    c.scaled_norm = detail::json_bool(j, "scaled_norm", c.scaled_norm);
    c.initial_surface = static_cast<int>(detail::json_num(j, "initial_surface", 0));

    c.t_final = detail::json_num(j, "t_final", c.t_final);
    c.dt = detail::json_num(j, "dt", c.epsilon / 32.0);

    c.q_min = detail::json_num(j, "q_min", c.q_min);
    c.q_max = detail::json_num(j, "q_max", c.q_max);
    c.p_min = detail::json_num(j, "p_min", c.p_min);
    c.p_max = detail::json_num(j, "p_max", c.p_max);
    c.dq = detail::json_num(j, "dq", 2.0 * pi * c.epsilon / 8.0);
    c.dp = detail::json_num(j, "dp", 3.0 * c.epsilon / 4.0);

    c.x_min = detail::json_num(j, "x_min", c.x_min);
    c.x_max = detail::json_num(j, "x_max", c.x_max);
    c.dx = detail::json_num(j, "dx", 2.0 * pi * c.epsilon / 32.0);
    c.dy = detail::json_num(j, "dy", 2.0 * pi * c.epsilon / 32.0);

    const std::string mode = detail::json_str(j, "sampling_mode", "stratified");
    if (mode == "stratified") c.sampling_mode = SamplingMode::stratified;
    else if (mode == "iid") c.sampling_mode = SamplingMode::iid;
    else throw ConfigError("sampling_mode must be 'stratified' or 'iid'");

    c.partition_m = static_cast<int>(detail::json_num(j, "partition_m", c.partition_m));
    c.n_traj = static_cast<std::int64_t>(detail::json_num(j, "n_traj",
                                                          static_cast<double>(c.n_traj)));
    c.amplitude_floor = detail::json_num(j, "amplitude_floor", c.amplitude_floor);

    c.replications = static_cast<int>(detail::json_num(j, "replications", c.replications));
    c.seed = static_cast<std::uint64_t>(detail::json_num(j, "seed", 1.0));
    c.workers = static_cast<int>(detail::json_num(j, "workers", 0));
    c.exact_thinning = detail::json_bool(j, "exact_thinning", false);
    c.disable_weights = detail::json_bool(j, "disable_weights", false);

    c.checkpoint_every = detail::json_num(j, "checkpoint_every", 0.0);

    c.with_reference = detail::json_bool(j, "with_reference", true);
    c.ref_dx = detail::json_num(j, "ref_dx", c.dx / 2.0);
    c.ref_dt = detail::json_num(j, "ref_dt", c.epsilon / 32.0);
    c.cache_dir = detail::json_str(j, "cache_dir", "");
    c.out_dir = detail::json_str(j, "out_dir", c.out_dir);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    detail::require<ConfigError>(in.good(), "cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

/**
 * Reject configurations the numerics cannot honor before any work starts.
 * The hop-probability screen bounds the per-step rate by
 * max|p| * max|d01| over the spatial box; runs violating dt * bound < 0.5
 * would sit uncomfortably close to the Bernoulli overflow guard.
 */
template <class Model>
void validate_config(const RunConfig& c, const Model& model) {
    detail::require<ConfigError>(c.epsilon > 0.0, "epsilon must be positive");
    detail::require<ConfigError>(c.t_final >= 0.0, "t_final must be nonnegative");
    detail::require<ConfigError>(c.dt > 0.0, "dt must be positive");
    detail::require<ConfigError>(c.initial_surface == 0 || c.initial_surface == 1,
                                 "initial_surface must be 0 or 1");
    detail::require<ConfigError>(c.partition_m >= 1, "partition_m must be >= 1");
    detail::require<ConfigError>(c.n_traj >= 1, "n_traj must be >= 1");
    detail::require<ConfigError>(c.replications >= 1, "replications must be >= 1");
    detail::require<ConfigError>(c.workers >= 0, "workers must be >= 0");
    detail::require<ConfigError>(c.amplitude_floor >= 0.0, "amplitude_floor must be >= 0");
    detail::require<ConfigError>(c.dy > 0.0, "dy must be positive");

    detail::step_count(0.0, c.t_final, c.dt);
    if (c.checkpoint_every > 0.0) {
        detail::step_count(0.0, c.checkpoint_every, c.dt);
        detail::step_count(0.0, c.t_final, c.checkpoint_every);
    }
    c.phase_mesh();
    c.x_mesh();
    if (c.with_reference) {
        c.reference_mesh();
        detail::require<ConfigError>(c.ref_dt > 0.0, "ref_dt must be positive");
        detail::step_count(0.0, c.t_final, c.ref_dt);
        if (c.checkpoint_every > 0.0) detail::step_count(0.0, c.checkpoint_every, c.ref_dt);
    }

    double d01_max = 0.0;
    for (int j = 0; j <= 512; ++j) {
        const double x = c.x_min + j * (c.x_max - c.x_min) / 512.0;
        d01_max = std::max(d01_max, std::fabs(model.coupling(x).d01));
    }
    const double rate_bound = c.phase_mesh().p_abs_max() * d01_max;
    detail::require<ConfigError>(
        c.dt * rate_bound < 0.5,
        "dt too large for the hopping intensity: dt * max rate = " +
            std::to_string(c.dt * rate_bound) + " (needs < 0.5)");
}

} // namespace fgash

#endif

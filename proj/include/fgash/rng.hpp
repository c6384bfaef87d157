#ifndef FGASH_RNG_HPP
#define FGASH_RNG_HPP

#include <cstdint>
#include <random>

namespace fgash {
namespace rng {

/** splitmix64 finalizer; good avalanche, used to derive independent stream ids. */
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/** Stream purposes keep draws for different jobs decorrelated by construction. */
enum : std::uint64_t {
    purpose_trajectory = 1,
    purpose_sampling   = 2,
    purpose_synthetic  = 3,
};

/**
 * Deterministic substream id: one master seed fans out per (purpose,
 * replication, index).  Every trajectory owns exactly one stream, so results
 * do not depend on scheduling or worker count.
 */
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t purpose,
                               std::uint64_t replication, std::uint64_t index) {
    std::uint64_t s = mix64(seed ^ mix64(purpose));
    s = mix64(s ^ mix64(replication + 0x1000AB23ull));
    s = mix64(s ^ mix64(index + 0x9E02F1D7ull));
    return s;
}

/** Counter-seeded mt19937_64 with the bit layout fixed for reproducibility. */
class Stream {
public:
    explicit Stream(std::uint64_t stream_id) : eng_(stream_id) {}

    /** Uniform on [0, 1): top 53 bits of the generator output. */
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    /** Standard exponential via inversion; uniform() < 1 keeps this finite. */
    double exponential() {
        return -std::log1p(-uniform());
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

} // namespace rng
} // namespace fgash

#endif

#ifndef FGASH_ERRORS_HPP
#define FGASH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fgash {

/** Configuration rejected before any numerics ran (CLI exit code 2). */
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/** Base for conditions that abort a computation in progress (CLI exit code 3). */
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/** Eigenvalue gap fell below the resolvable threshold. */
struct DegenerateGap : NumericalError {
    explicit DegenerateGap(const std::string& msg) : NumericalError(msg) {}
};

/** Quadrature grid cannot resolve the oscillation of the integrand. */
struct MeshTooCoarse : NumericalError {
    explicit MeshTooCoarse(const std::string& msg) : NumericalError(msg) {}
};

/** Amplitude field is identically zero, nothing to partition or sample. */
struct EmptyField : NumericalError {
    explicit EmptyField(const std::string& msg) : NumericalError(msg) {}
};

/** Per-step hop probability reached 1, the step size is unusable. */
struct HopProbabilityOverflow : NumericalError {
    explicit HopProbabilityOverflow(const std::string& msg) : NumericalError(msg) {}
};

/** The beam width parameter Z lost invertibility. */
struct IllConditionedZ : NumericalError {
    explicit IllConditionedZ(const std::string& msg) : NumericalError(msg) {}
};

/** Ensemble members were evolved to different final times. */
struct MixedFinalTimes : NumericalError {
    explicit MixedFinalTimes(const std::string& msg) : NumericalError(msg) {}
};

/** Two fields live on different spatial meshes and cannot be compared. */
struct MeshMismatch : NumericalError {
    explicit MeshMismatch(const std::string& msg) : NumericalError(msg) {}
};

/** Field has no mass, a population ratio is undefined. */
struct ZeroField : NumericalError {
    explicit ZeroField(const std::string& msg) : NumericalError(msg) {}
};

/** Wave amplitude reached the edge of the periodic box. */
struct BoundaryContamination : NumericalError {
    explicit BoundaryContamination(const std::string& msg) : NumericalError(msg) {}
};

/** Truncated expansion would drop terms above the accuracy target. */
struct TailTooLarge : NumericalError {
    explicit TailTooLarge(const std::string& msg) : NumericalError(msg) {}
};

namespace detail {

/** Throw E(msg) unless cond holds; mirrors assert-style guards at API boundaries. */
template <class E>
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw E(msg);
}

} // namespace detail

} // namespace fgash

#endif

#ifndef EHW_COMMON_HPP
#define EHW_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ehw {

enum class ErrorKind {
    Parameter,   // bad argument / precondition violation
    Validation,  // network failed structural validation
    Input,       // runtime input mismatch (e.g. tensor shape)
    Design,      // invalid execution design
    Infeasible,  // design cannot run under the given power/cost budget
    Supply,      // power supply cannot sustain even recovery
    Parse,       // malformed file content
    Schema,      // JSON schema violation
    State,       // unrecoverable persistent state
    Io,          // filesystem failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Deterministic 64-bit PRNG (SplitMix64). Every random decision in the
// project flows through this so results are bit-identical across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform value in [0, n). n must be positive.
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

    // Uniform value in [lo, hi] inclusive.
    std::int64_t next_range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

private:
    std::uint64_t state_;
};

} // namespace ehw

#endif

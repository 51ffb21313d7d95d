#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trieplan {

// Errors raised by config parsing / file loading carry a path-to-field hint.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// ── Deterministic hashing / counter-based RNG ─────────────────────────
// All randomness in the project is a pure function of (seed, tag, keys...),
// so regenerating any artifact from the same inputs is bit-identical.

std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

inline std::uint64_t hash_key(std::uint64_t seed, std::string_view tag) {
    return hash_combine(seed, fnv1a64(tag));
}
inline std::uint64_t hash_key(std::uint64_t seed, std::string_view tag, std::uint64_t a) {
    return hash_combine(hash_key(seed, tag), a);
}
inline std::uint64_t hash_key(std::uint64_t seed, std::string_view tag, std::uint64_t a,
                              std::uint64_t b) {
    return hash_combine(hash_key(seed, tag, a), b);
}

// Uniform in [0,1) from a hashed key; 53 mantissa bits.
double u01(std::uint64_t h);
// Standard normal via Box-Muller on two derived uniforms.
double std_normal(std::uint64_t h);
// Multiplicative lognormal with unit mean: exp(N(-sigma^2/2, sigma)).
double lognormal_unit_mean(double sigma, std::uint64_t h);

// ── Formatting ────────────────────────────────────────────────────────
// Shortest round-trip decimal form; used for every number that lands in a
// CSV or JSON artifact so reruns are byte-identical.
std::string fmt_double(double v);

// RFC-4180 field quoting (commas, quotes, newlines).
std::string csv_escape(std::string_view field);

// ── Deterministic parallel map ────────────────────────────────────────
// Splits [0,n) into chunks of a fixed size (independent of thread count)
// and runs fn(begin,end) on workers. Callers own output slots per index,
// so results do not depend on scheduling.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t chunk = 1024);

}  // namespace trieplan

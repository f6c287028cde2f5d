#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cbaudit {

inline constexpr std::string_view kToolVersion = "0.3.0";

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that cannot be used at all (missing file, missing column, bad config).
class FatalInputError : public Error {
public:
    using Error::Error;
};

// SplitMix64 finalizer. Used to derive independent sub-seeds from a master seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Uniform integer in [0, bound) by rejection sampling. Unlike
/// std::uniform_int_distribution the sequence is identical on every standard
/// library, which the determinism contracts rely on.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % bound);
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

/// Uniform real in [0, 1) with 53 bits of precision.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace cbaudit

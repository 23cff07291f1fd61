#pragma once

#include <array>
#include <cstdint>

namespace shelab {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure function of
/// (counter, key); every random draw in the library is derived from it.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
               static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
               static_cast<std::uint32_t>(p0)};
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
    }
    return ctr;
}

/// Domain tags keep the draw families of different pipeline stages disjoint.
enum class RngDomain : std::uint32_t {
    gibbs = 1,
    dynamics = 2,
    bootstrap = 3,
    generic = 4,
};

/// Maps a 32-bit word to the open interval (0, 1).
inline double word_to_unit(std::uint32_t w) { return (static_cast<double>(w) + 0.5) * 0x1p-32; }

/// Counter-based stream: draw `counter` of replica `stream` under `seed` is a
/// pure function of those three numbers and the domain.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint32_t stream, RngDomain domain = RngDomain::generic,
              std::uint32_t counter = 0)
        : seed_(seed), stream_(stream), domain_(domain), counter_(counter) {}

    std::uint64_t seed() const { return seed_; }
    std::uint32_t stream() const { return stream_; }
    std::uint32_t counter() const { return counter_; }

    /// Moves the counter forward without drawing; buffered draws are discarded.
    void skip(std::uint32_t blocks) {
        counter_ += blocks;
        buffered_ = 0;
        has_spare_ = false;
    }

    /// Next raw 4-word block; advances the counter by one.
    std::array<std::uint32_t, 4> next_block();

    /// Uniform on (0,1).
    double uniform();
    /// Standard normal (Box-Muller on 32-bit uniforms).
    double normal();

private:
    void refill();

    std::uint64_t seed_;
    std::uint32_t stream_;
    RngDomain domain_;
    std::uint32_t counter_;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

inline std::array<std::uint32_t, 2> seed_key(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace shelab

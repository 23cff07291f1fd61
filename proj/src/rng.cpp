#include "shelab/rng.hpp"

#include <cmath>
#include <numbers>

namespace shelab {

std::array<std::uint32_t, 4> RngStream::next_block() {
    const auto block = philox4x32({0u, counter_, static_cast<std::uint32_t>(domain_), stream_},
                                  seed_key(seed_));
    ++counter_;
    return block;
}

void RngStream::refill() {
    buffer_ = next_block();
    buffered_ = 4;
}

double RngStream::uniform() {
    if (buffered_ == 0) refill();
    return word_to_unit(buffer_[4 - buffered_--]);
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
}

}  // namespace shelab

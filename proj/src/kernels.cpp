#include "kernels.hpp"

#include <cmath>
#include <numbers>

#include "shelab/rng.hpp"

namespace shelab::kernels {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void dynamics_normals(std::uint64_t seed, std::uint32_t step, std::uint32_t first_replica, int slots, int width,
                      double* out, double* scratch) {
    const auto key = seed_key(seed);
    const std::uint32_t domain = static_cast<std::uint32_t>(RngDomain::dynamics);
    double* __restrict u0 = scratch;
    double* __restrict u1 = scratch + width;
    double* __restrict u2 = scratch + 2 * width;
    double* __restrict u3 = scratch + 3 * width;

    for (int block = 0; 4 * block < slots; ++block) {
#pragma omp simd
        for (int r = 0; r < width; ++r) {
            std::uint32_t c0 = static_cast<std::uint32_t>(block), c1 = step, c2 = domain,
                          c3 = first_replica + static_cast<std::uint32_t>(r);
            std::uint32_t k0 = key[0], k1 = key[1];
            for (int round = 0; round < 10; ++round) {
                const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0;
                const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2;
                const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
                const std::uint32_t n1 = static_cast<std::uint32_t>(p1);
                const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
                const std::uint32_t n3 = static_cast<std::uint32_t>(p0);
                c0 = n0;
                c1 = n1;
                c2 = n2;
                c3 = n3;
                k0 += 0x9E3779B9u;
                k1 += 0xBB67AE85u;
            }
            u0[r] = (static_cast<double>(c0) + 0.5) * 0x1p-32;
            u1[r] = (static_cast<double>(c1) + 0.5) * 0x1p-32;
            u2[r] = (static_cast<double>(c2) + 0.5) * 0x1p-32;
            u3[r] = (static_cast<double>(c3) + 0.5) * 0x1p-32;
        }
        // Box-Muller: radii in u0/u2, angles from u1/u3.
#pragma omp simd
        for (int r = 0; r < width; ++r) {
            u0[r] = std::sqrt(-2.0 * std::log(u0[r]));
            u2[r] = std::sqrt(-2.0 * std::log(u2[r]));
        }
        const int base = 4 * block;
        double* z0 = out + base * width;
        if (base + 2 < slots) {
            double* z2 = out + (base + 2) * width;
#pragma omp simd
            for (int r = 0; r < width; ++r) {
                z0[r] = u0[r] * std::cos(kTwoPi * u1[r]);
                z2[r] = u2[r] * std::cos(kTwoPi * u3[r]);
            }
        } else {
#pragma omp simd
            for (int r = 0; r < width; ++r) z0[r] = u0[r] * std::cos(kTwoPi * u1[r]);
        }
        if (base + 3 < slots) {
            double* z1 = out + (base + 1) * width;
            double* z3 = out + (base + 3) * width;
#pragma omp simd
            for (int r = 0; r < width; ++r) {
                z1[r] = u0[r] * std::sin(kTwoPi * u1[r]);
                z3[r] = u2[r] * std::sin(kTwoPi * u3[r]);
            }
        } else if (base + 1 < slots) {
            double* z1 = out + (base + 1) * width;
#pragma omp simd
            for (int r = 0; r < width; ++r) z1[r] = u0[r] * std::sin(kTwoPi * u1[r]);
        }
    }
}

void sine_force(const double* u, const double* phase, int ld, int cols, double scale, double* force) {
    for (int c = 0; c < cols; ++c) {
        const double* __restrict in = u + static_cast<long>(c) * ld;
        double* __restrict out = force + static_cast<long>(c) * ld;
#pragma omp simd
        for (int k = 0; k < ld; ++k) out[k] = scale * std::sin(kTwoPi * in[k] + phase[k]);
    }
}

}  // namespace shelab::kernels

#pragma once

// Batched inner loops of the time stepper. Every array argument is laid out
// with a leading dimension that is a multiple of kLaneAlign doubles and is
// 64-byte aligned, so each element passes through the same vector code path
// whatever its position in the batch.

#include <cstdint>

namespace shelab::kernels {

inline constexpr int kLaneAlign = 8;

inline int padded(int n) { return (n + kLaneAlign - 1) / kLaneAlign * kLaneAlign; }

/// Standard normals for `width` consecutive replicas at one time step.
/// out[slot * width + r] is draw `slot` of replica first_replica + r.
/// `scratch` must hold 4 * width doubles.
void dynamics_normals(std::uint64_t seed, std::uint32_t step, std::uint32_t first_replica, int slots, int width,
                      double* out, double* scratch);

/// force[c * ld + k] = scale * sin(2 pi u[c * ld + k] + phase[k]) for k < ld, c < cols.
void sine_force(const double* u, const double* phase, int ld, int cols, double scale, double* force);

}  // namespace shelab::kernels

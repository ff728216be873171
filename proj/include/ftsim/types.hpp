#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>

namespace ftsim {

/// Scalar used throughout the numeric core.
using Scalar = double;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Per-resource triple (CPU, memory, bandwidth); the unit of all usage math.
/// Array semantics so componentwise products/comparisons stay expression-friendly.
using ResourceVector = Eigen::Array3d;

inline constexpr int kNumResources = 3;

enum class Resource : int { cpu = 0, mem = 1, bw = 2 };

inline const char* resource_name(int r) {
  static constexpr std::array<const char*, 3> names{"cpu", "mem", "bw"};
  return names.at(static_cast<std::size_t>(r));
}

inline ResourceVector clamp01(const ResourceVector& v) {
  return v.max(0.0).min(1.0);
}

/// true iff demand <= capacity componentwise (with slack for float sums).
inline bool fits_within(const ResourceVector& demand, const ResourceVector& capacity,
                        double tol = 1e-9) {
  return (demand <= capacity + tol).all();
}

inline bool exceeds_any(const ResourceVector& demand, const ResourceVector& limit,
                        double tol = 0.0) {
  return (demand > limit + tol).any();
}

/// splitmix64 step; derives independent deterministic RNG streams from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ftsim

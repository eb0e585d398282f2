#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace stochwave {

/// Truncated Wiener increments on a uniform grid of [0, T].
///
/// Two matrices are kept, both N x r and row-major. `brownian` holds the
/// genuine increments W_j(t_n) - W_j(t_{n-1}) of one Brownian realization.
/// `increments` is what the scheme consumes: identical except that the first
/// row is zero. Refinement and coarsening act on `brownian`, so paths at
/// different resolutions stay coupled to the same realization.
class WienerPath {
public:
  WienerPath(int steps, int modes, double horizon, std::uint64_t seed, std::vector<double> brownian,
             int refinement_level = 0);

  [[nodiscard]] int steps() const { return steps_; }
  [[nodiscard]] int modes() const { return modes_; }
  [[nodiscard]] double horizon() const { return horizon_; }
  [[nodiscard]] double tau() const { return horizon_ / steps_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] int refinement_level() const { return refinement_level_; }

  /// Scheme increments of step n (1-based, n = 1..N); step 1 is all zeros.
  [[nodiscard]] std::span<const double> increment(int n) const;
  [[nodiscard]] double increment(int n, int j) const { return increment(n)[static_cast<std::size_t>(j - 1)]; }
  /// Underlying Brownian increments of step n, including the first step.
  [[nodiscard]] std::span<const double> brownian(int n) const;

  [[nodiscard]] const std::vector<double>& increments() const { return increments_; }
  [[nodiscard]] const std::vector<double>& brownian() const { return brownian_; }

  friend bool operator==(const WienerPath&, const WienerPath&) = default;

private:
  int steps_;
  int modes_;
  double horizon_;
  std::uint64_t seed_;
  int refinement_level_;
  std::vector<double> brownian_;
  std::vector<double> increments_;
};

/// Draws N x r independent N(0, tau) increments from `seed`, one random
/// substream per mode, so a path with more modes agrees with a truncated one
/// on the shared modes. Values are rounded to a fixed binary grid set by T
/// (spacing 2^-48 times the power of two just above sqrt(T)), which keeps
/// refinement sums exact. Bit-reproducible for identical arguments. Throws
/// std::invalid_argument for non-positive N, r or T.
WienerPath generate_path(int steps, int modes, double horizon, std::uint64_t seed);

/// Brownian-bridge bisection: each step is split in two by sampling the
/// midpoint of the bridge, so child pairs sum exactly to the parent's
/// Brownian increment. The child's first scheme increment is zero again.
/// Randomness for the midpoints is derived from (seed, refinement level, mode).
WienerPath refine_path(const WienerPath& path);

/// Inverse of refine_path: sums consecutive pairs of Brownian increments.
/// Requires an even number of steps.
WienerPath coarsen_path(const WienerPath& path);

/// Binary dump: int64 N, int64 r, float64 tau, uint64 seed, then the N x r
/// scheme increments as row-major float64, all little-endian.
void write_path(const WienerPath& path, const std::filesystem::path& file);
WienerPath read_path(const std::filesystem::path& file);

}  // namespace stochwave

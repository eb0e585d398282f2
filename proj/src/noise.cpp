#include "stochwave/noise.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace stochwave {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, int level, int mode)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffULL), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(level), static_cast<std::uint32_t>(mode), 0x5eedU};
  return std::mt19937_64(seq);
}

// Every stored value is an integer multiple of this power of two, chosen
// from T alone so it is shared by all refinement levels. Sums and
// differences of grid values below kGridSpan * 2^k are then exact.
constexpr int kGridBits = 48;
constexpr double kGridSpan = 32.0;

double grid_scale(double horizon)
{
  return std::exp2(std::ceil(std::log2(std::sqrt(horizon))));
}

double quantum(double horizon)
{
  return std::ldexp(grid_scale(horizon), -kGridBits);
}

double snap(double x, double q)
{
  return std::nearbyint(x / q) * q;
}

template <class T>
void put(std::ofstream& out, T value)
{
  static_assert(std::endian::native == std::endian::little, "dump format assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::ifstream& in)
{
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) {
    throw std::runtime_error("read_path: truncated file");
  }
  return value;
}

}  // namespace

WienerPath::WienerPath(int steps, int modes, double horizon, std::uint64_t seed, std::vector<double> brownian,
                       int refinement_level)
    : steps_(steps),
      modes_(modes),
      horizon_(horizon),
      seed_(seed),
      refinement_level_(refinement_level),
      brownian_(std::move(brownian))
{
  if (steps < 1 || modes < 1 || !(horizon > 0.0)) {
    throw std::invalid_argument("WienerPath: need N >= 1, r >= 1 and T > 0");
  }
  if (brownian_.size() != static_cast<std::size_t>(steps) * static_cast<std::size_t>(modes)) {
    throw std::invalid_argument("WienerPath: increment matrix has the wrong size");
  }
  increments_ = brownian_;
  std::fill(increments_.begin(), increments_.begin() + modes_, 0.0);
}

std::span<const double> WienerPath::increment(int n) const
{
  if (n < 1 || n > steps_) {
    throw std::out_of_range("WienerPath: step index out of range");
  }
  return {increments_.data() + static_cast<std::size_t>(n - 1) * modes_, static_cast<std::size_t>(modes_)};
}

std::span<const double> WienerPath::brownian(int n) const
{
  if (n < 1 || n > steps_) {
    throw std::out_of_range("WienerPath: step index out of range");
  }
  return {brownian_.data() + static_cast<std::size_t>(n - 1) * modes_, static_cast<std::size_t>(modes_)};
}

WienerPath generate_path(int steps, int modes, double horizon, std::uint64_t seed)
{
  if (steps < 1 || modes < 1 || !(horizon > 0.0)) {
    throw std::invalid_argument("generate_path: need N >= 1, r >= 1 and T > 0");
  }
  const double q = quantum(horizon);
  const double limit = kGridSpan * grid_scale(horizon);
  std::vector<double> draws(static_cast<std::size_t>(steps) * static_cast<std::size_t>(modes));
  // one substream per mode, so truncating r keeps the leading modes
  for (int j = 0; j < modes; ++j) {
    auto engine = make_engine(seed, 0, j);
    std::normal_distribution<double> gauss(0.0, std::sqrt(horizon / steps));
    for (int n = 0; n < steps; ++n) {
      double x = snap(gauss(engine), q);
      while (std::abs(x) >= limit) {  // beyond 32 standard deviations of the whole path
        x = snap(gauss(engine), q);
      }
      draws[static_cast<std::size_t>(n) * modes + j] = x;
    }
  }
  return WienerPath(steps, modes, horizon, seed, std::move(draws));
}

WienerPath refine_path(const WienerPath& path)
{
  const int level = path.refinement_level() + 1;
  // W(mid) = (W(a) + W(b)) / 2 + sqrt(tau) / 2 * Z
  const double spread = 0.5 * std::sqrt(path.tau());
  const double q = quantum(path.horizon());
  const double limit = kGridSpan * grid_scale(path.horizon());
  const int modes = path.modes();
  std::vector<double> child(path.brownian().size() * 2);
  for (int j = 0; j < modes; ++j) {
    auto engine = make_engine(path.seed(), level, j);
    std::normal_distribution<double> gauss;
    for (int n = 1; n <= path.steps(); ++n) {
      const double total = path.brownian(n)[static_cast<std::size_t>(j)];
      // both halves on the grid, so the remainder and the pair sum are exact
      double first = snap(0.5 * total + spread * gauss(engine), q);
      while (std::abs(first) >= limit || std::abs(total - first) >= limit) {
        first = snap(0.5 * total + spread * gauss(engine), q);
      }
      child[static_cast<std::size_t>(2 * (n - 1)) * modes + j] = first;
      child[static_cast<std::size_t>(2 * n - 1) * modes + j] = total - first;
    }
  }
  return WienerPath(2 * path.steps(), modes, path.horizon(), path.seed(), std::move(child), level);
}

WienerPath coarsen_path(const WienerPath& path)
{
  if (path.steps() % 2 != 0) {
    throw std::invalid_argument("coarsen_path: number of steps must be even");
  }
  const int modes = path.modes();
  const int steps = path.steps() / 2;
  std::vector<double> coarse(static_cast<std::size_t>(steps) * modes);
  for (int n = 1; n <= steps; ++n) {
    const auto a = path.brownian(2 * n - 1);
    const auto b = path.brownian(2 * n);
    for (int j = 0; j < modes; ++j) {
      coarse[static_cast<std::size_t>(n - 1) * modes + j] = a[static_cast<std::size_t>(j)] + b[static_cast<std::size_t>(j)];
    }
  }
  return WienerPath(steps, modes, path.horizon(), path.seed(), std::move(coarse), path.refinement_level() - 1);
}

void write_path(const WienerPath& path, const std::filesystem::path& file)
{
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw std::runtime_error("write_path: cannot open " + file.string());
  }
  put<std::int64_t>(out, path.steps());
  put<std::int64_t>(out, path.modes());
  put<double>(out, path.tau());
  put<std::uint64_t>(out, path.seed());
  for (double x : path.increments()) {
    put<double>(out, x);
  }
  if (!out) {
    throw std::runtime_error("write_path: write failed for " + file.string());
  }
}

WienerPath read_path(const std::filesystem::path& file)
{
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw std::runtime_error("read_path: cannot open " + file.string());
  }
  const auto steps = get<std::int64_t>(in);
  const auto modes = get<std::int64_t>(in);
  const auto tau = get<double>(in);
  const auto seed = get<std::uint64_t>(in);
  if (steps < 1 || modes < 1 || !(tau > 0.0)) {
    throw std::runtime_error("read_path: invalid header");
  }
  std::vector<double> data(static_cast<std::size_t>(steps * modes));
  for (auto& x : data) {
    x = get<double>(in);
  }
  // the dump carries scheme increments only, so the first Brownian step reads back as zero
  return WienerPath(static_cast<int>(steps), static_cast<int>(modes), tau * static_cast<double>(steps), seed,
                    std::move(data));
}

}  // namespace stochwave

#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "wnn/image.hpp"

namespace wnn {

/// Number of reference images a kernel call processes side by side.
inline constexpr int kLanes = 16;

/// Query image widened to 32-bit, row-major.
struct alignas(64) QueryImage {
  std::array<std::int32_t, kPixelCount> px{};
};

[[nodiscard]] QueryImage make_query(const Image& image) noexcept;

/// kLanes reference images interleaved pixel-major: px[pixel * kLanes + lane].
struct alignas(64) ImageBlock {
  std::array<std::int16_t, kPixelCount * kLanes> px{};
};

/// Reference images packed into lane blocks. A partially filled final block
/// repeats its last image, which leaves every minimum unchanged.
class ReferenceSet {
 public:
  ReferenceSet() = default;
  explicit ReferenceSet(std::span<const Image> images) { append(images); }

  void append(std::span<const Image> images);
  void append(const Image& image);
  void clear() noexcept;

  [[nodiscard]] std::size_t size() const noexcept { return count_; }
  [[nodiscard]] bool empty() const noexcept { return count_ == 0; }
  [[nodiscard]] std::span<const ImageBlock> blocks() const noexcept { return blocks_; }

 private:
  std::vector<ImageBlock> blocks_;
  std::size_t count_ = 0;
};

/// Per-window values indexed by the row-major position of the window centre.
using WindowValues = std::array<double, kPixelCount>;

/// Set of excluded windows, indexed like WindowValues (0-based).
using WindowMask = std::bitset<kPixelCount>;

/// Exponent p >= 1 of the L^p window distance.
class Exponent {
 public:
  explicit Exponent(double p = 2.0);
  [[nodiscard]] double value() const noexcept { return p_; }
  /// True when p is a whole number, so every per-pixel cost |d|^p is an integer.
  [[nodiscard]] bool is_integral() const noexcept { return integral_; }
  /// |d|^p for d in [0,255]; exact for whole-number p while the value fits
  /// in 53 bits.
  [[nodiscard]] double cost(int abs_diff) const noexcept;
  [[nodiscard]] double root(double power_sum) const noexcept;

  friend bool operator==(const Exponent& a, const Exponent& b) noexcept { return a.p_ == b.p_; }

 private:
  double p_;
  bool integral_;
};

/// Validates a window side length (positive and odd).
void check_window_size(int window_size);

/// Tracks, for one query image, the running minimum over a stream of
/// reference images of every window's p-th-power sum
///
///     sum_{k in W} |query(k) - ref(k)|^p
///
/// for all 784 windows of side `window_size`. Out-of-grid pixels read as 0.
///
/// Reference images are consumed kLanes at a time and each lane keeps its
/// own minima, so the box sums are plain element-wise vector operations.
/// Whole exponents whose window sums fit in 32 bits (always p = 1 and
/// p = 2) use exact unsigned running sums: O(784) work per reference image.
/// Other exponents use double arithmetic with direct sums.
class WindowMinimaAccumulator {
 public:
  WindowMinimaAccumulator(int window_size, Exponent p);
  ~WindowMinimaAccumulator();
  WindowMinimaAccumulator(WindowMinimaAccumulator&&) noexcept;
  WindowMinimaAccumulator& operator=(WindowMinimaAccumulator&&) noexcept;
  WindowMinimaAccumulator(const WindowMinimaAccumulator& other);
  WindowMinimaAccumulator& operator=(const WindowMinimaAccumulator& other);

  /// Forgets every reference image seen so far.
  void reset() noexcept;
  void update(const QueryImage& query, const ImageBlock& block) noexcept;
  void update(const QueryImage& query, const ReferenceSet& references) noexcept;
  /// Element-wise min with another accumulator of the same configuration.
  void merge(const WindowMinimaAccumulator& other);

  [[nodiscard]] bool empty() const noexcept { return !seen_; }
  [[nodiscard]] int window_size() const noexcept { return window_size_; }
  [[nodiscard]] const Exponent& exponent() const noexcept { return p_; }
  /// True when the kernel runs on exact integer arithmetic.
  [[nodiscard]] bool exact() const noexcept;

  /// Minimal p-th-power sums per window. Throws ContractViolation if empty.
  [[nodiscard]] WindowValues minima() const;
  /// Sum of minima over windows whose mask bit is clear. Throws
  /// ContractViolation if empty or if every window is excluded.
  [[nodiscard]] double power_sum(const WindowMask& excluded = {}) const;

  struct Impl;

 private:
  int window_size_;
  Exponent p_;
  bool seen_ = false;
  std::unique_ptr<Impl> impl_;
};

/// Full-image p-th-power distances sum_k |query(k) - ref(k)|^p, one per lane.
void full_power_distances(const QueryImage& query, const ImageBlock& block, const Exponent& p,
                          std::span<double, kLanes> out) noexcept;

/// Smallest full-image p-th-power distance from `query` to any reference.
/// Throws ContractViolation when `references` is empty.
[[nodiscard]] double min_full_power_distance(const QueryImage& query,
                                             const ReferenceSet& references, const Exponent& p);

}  // namespace wnn

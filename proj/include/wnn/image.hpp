#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace wnn {

inline constexpr int kSide = 28;
inline constexpr int kPixelCount = kSide * kSide;
inline constexpr int kClassCount = 10;

using Pixels = std::array<std::uint8_t, kPixelCount>;

/// A 28x28 greyscale image. Reads outside the grid yield 0.
class Image {
 public:
  Image() noexcept : pixels_{} {}
  explicit Image(const Pixels& pixels) noexcept : pixels_(pixels) {}

  /// Throws ParameterError unless `bytes` holds exactly 784 values.
  static Image from_bytes(std::span<const std::uint8_t> bytes);

  [[nodiscard]] std::uint8_t at(int row, int col) const noexcept {
    if (row < 0 || row >= kSide || col < 0 || col >= kSide) return 0;
    return pixels_[static_cast<std::size_t>(row * kSide + col)];
  }
  void set(int row, int col, std::uint8_t value);

  [[nodiscard]] const Pixels& pixels() const noexcept { return pixels_; }
  [[nodiscard]] Pixels& pixels() noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Pixels pixels_;
};

/// Row/column swap. EMNIST stores its images transposed with respect to the
/// MNIST display orientation; applying this once at load time fixes that.
[[nodiscard]] Image orient_emnist(const Image& image) noexcept;

/// Two-valued image: values below `threshold` become 0, the rest 255.
/// Throws ParameterError if `threshold` is 0.
[[nodiscard]] Image binarize(const Image& image, int threshold);

/// Ten per-digit image collections. `ids` carries the 1-based position of
/// each image within its digit in dataset order (training file first, then
/// test file), so misclassified images can be compared across splits.
class LabeledSet {
 public:
  struct Class {
    std::vector<Image> images;
    std::vector<std::uint32_t> ids;
    friend bool operator==(const Class&, const Class&) = default;
  };

  LabeledSet() = default;

  void add(int digit, const Image& image, std::uint32_t id);
  /// Appends with id = current class size + 1.
  void add(int digit, const Image& image);

  [[nodiscard]] const Class& at(int digit) const;
  [[nodiscard]] const std::vector<Image>& images(int digit) const { return at(digit).images; }
  [[nodiscard]] std::size_t size(int digit) const { return at(digit).images.size(); }
  [[nodiscard]] std::size_t total() const noexcept;
  [[nodiscard]] bool all_classes_nonempty() const noexcept;

  friend bool operator==(const LabeledSet&, const LabeledSet&) = default;

 private:
  std::array<Class, kClassCount> classes_;
};

void check_digit(int digit);

}  // namespace wnn

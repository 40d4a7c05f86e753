#include "wnn/image.hpp"

#include <algorithm>
#include <string>

#include "wnn/error.hpp"

namespace wnn {

Image Image::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != static_cast<std::size_t>(kPixelCount)) {
    throw ParameterError("image needs 784 pixels, got " + std::to_string(bytes.size()));
  }
  Image image;
  std::copy(bytes.begin(), bytes.end(), image.pixels_.begin());
  return image;
}

void Image::set(int row, int col, std::uint8_t value) {
  if (row < 0 || row >= kSide || col < 0 || col >= kSide) {
    throw ParameterError("pixel (" + std::to_string(row) + "," + std::to_string(col) +
                         ") is outside the 28x28 grid");
  }
  pixels_[static_cast<std::size_t>(row * kSide + col)] = value;
}

Image orient_emnist(const Image& image) noexcept {
  Image out;
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) {
      out.pixels()[static_cast<std::size_t>(c * kSide + r)] = image.at(r, c);
    }
  }
  return out;
}

Image binarize(const Image& image, int threshold) {
  if (threshold < 1 || threshold > 255) {
    throw ParameterError("binarization threshold must lie in [1,255], got " +
                         std::to_string(threshold));
  }
  Image out;
  std::transform(image.pixels().begin(), image.pixels().end(), out.pixels().begin(),
                 [threshold](std::uint8_t v) -> std::uint8_t { return v < threshold ? 0 : 255; });
  return out;
}

void check_digit(int digit) {
  if (digit < 0 || digit >= kClassCount) {
    throw ParameterError("digit must lie in [0,9], got " + std::to_string(digit));
  }
}

void LabeledSet::add(int digit, const Image& image, std::uint32_t id) {
  check_digit(digit);
  auto& cls = classes_[static_cast<std::size_t>(digit)];
  cls.images.push_back(image);
  cls.ids.push_back(id);
}

void LabeledSet::add(int digit, const Image& image) {
  add(digit, image, static_cast<std::uint32_t>(size(digit) + 1));
}

const LabeledSet::Class& LabeledSet::at(int digit) const {
  check_digit(digit);
  return classes_[static_cast<std::size_t>(digit)];
}

std::size_t LabeledSet::total() const noexcept {
  std::size_t n = 0;
  for (const auto& cls : classes_) n += cls.images.size();
  return n;
}

bool LabeledSet::all_classes_nonempty() const noexcept {
  return std::all_of(classes_.begin(), classes_.end(),
                     [](const Class& c) { return !c.images.empty(); });
}

}  // namespace wnn

#include "wnn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wnn/error.hpp"

namespace wnn {
namespace {

constexpr double kCentre = 13.5;
constexpr int kBlock = 20;
constexpr int kBlockOrigin = (kSide - kBlock) / 2;
constexpr double kAngles[] = {-25.0, -5.0, 5.0, 25.0};
constexpr int kSizes[][2] = {{18, 20}, {22, 20}, {20, 18}, {20, 22}};

std::uint8_t round_clamp(double v) {
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

double bilinear(const Image& image, double row, double col) {
  const double r0 = std::floor(row);
  const double c0 = std::floor(col);
  const double fr = row - r0;
  const double fc = col - c0;
  const int r = static_cast<int>(r0);
  const int c = static_cast<int>(c0);
  return (1 - fr) * ((1 - fc) * image.at(r, c) + fc * image.at(r, c + 1)) +
         fr * ((1 - fc) * image.at(r + 1, c) + fc * image.at(r + 1, c + 1));
}

// Shifts with max(|dx|,|dy|) <= radius, (0,0) first.
std::vector<std::pair<int, int>> shifts(int radius) {
  std::vector<std::pair<int, int>> out{{0, 0}};
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx != 0 || dy != 0) out.emplace_back(dx, dy);
    }
  }
  return out;
}

Image transform(const Image& image, const Variant& v) {
  if (v.rescaled()) return rescale_center(image, v.width, v.height);
  if (v.degrees != 0.0) return rotate(image, v.degrees);
  return image;
}

}  // namespace

Image shift(const Image& image, int dx, int dy) {
  if (std::abs(dx) > 2 || std::abs(dy) > 2) {
    throw ParameterError("shift (" + std::to_string(dx) + "," + std::to_string(dy) +
                         ") exceeds 2 pixels");
  }
  Image out;
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) {
      out.pixels()[static_cast<std::size_t>(r * kSide + c)] = image.at(r - dy, c - dx);
    }
  }
  return out;
}

Image rotate(const Image& image, double degrees) {
  if (!(degrees >= -45.0 && degrees <= 45.0)) {
    throw ParameterError("rotation angle must lie in [-45,45], got " + std::to_string(degrees));
  }
  if (degrees == 0.0) return image;
  const double t = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(t);
  const double sn = std::sin(t);
  Image out;
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) {
      const double u = c - kCentre;
      const double v = r - kCentre;
      const double src_c = kCentre + u * cs - v * sn;
      const double src_r = kCentre + u * sn + v * cs;
      out.pixels()[static_cast<std::size_t>(r * kSide + c)] =
          round_clamp(bilinear(image, src_r, src_c));
    }
  }
  return out;
}

Image rescale_center(const Image& image, int new_width, int new_height) {
  const bool supported = std::any_of(std::begin(kSizes), std::end(kSizes), [&](const int* s) {
    return s[0] == new_width && s[1] == new_height;
  });
  if (!supported) {
    throw ParameterError("unsupported rescale target " + std::to_string(new_width) + "x" +
                         std::to_string(new_height));
  }
  auto block_at = [&](int r, int c) {
    r = std::clamp(r, 0, kBlock - 1);
    c = std::clamp(c, 0, kBlock - 1);
    return static_cast<double>(image.at(kBlockOrigin + r, kBlockOrigin + c));
  };
  const int off_c = (kSide - new_width) / 2;
  const int off_r = (kSide - new_height) / 2;
  Image out;
  for (int i = 0; i < new_height; ++i) {
    const double sy = std::clamp((i + 0.5) * kBlock / new_height - 0.5, 0.0, kBlock - 1.0);
    const int y0 = static_cast<int>(sy);
    const double fy = sy - y0;
    for (int j = 0; j < new_width; ++j) {
      const double sx = std::clamp((j + 0.5) * kBlock / new_width - 0.5, 0.0, kBlock - 1.0);
      const int x0 = static_cast<int>(sx);
      const double fx = sx - x0;
      const double v = (1 - fy) * ((1 - fx) * block_at(y0, x0) + fx * block_at(y0, x0 + 1)) +
                       fy * ((1 - fx) * block_at(y0 + 1, x0) + fx * block_at(y0 + 1, x0 + 1));
      out.pixels()[static_cast<std::size_t>((off_r + i) * kSide + off_c + j)] = round_clamp(v);
    }
  }
  return out;
}

Level parse_level(const std::string& name) {
  static const char* names[] = {"set0", "set1", "set2", "set3", "set4"};
  for (int i = 0; i < 5; ++i) {
    if (name == names[i] || name == std::to_string(i)) return static_cast<Level>(i);
  }
  throw ParameterError("unknown augmentation level '" + name + "' (expected set0..set4)");
}

std::string to_string(Level level) { return "set" + std::to_string(static_cast<int>(level)); }

Image Variant::apply(const Image& base) const {
  if (order == TransformOrder::shift_first) return transform(shift(base, dx, dy), *this);
  return shift(transform(base, *this), dx, dy);
}

std::vector<Variant> level_variants(const AugmentLevel& spec) {
  const bool mnist = spec.dataset == DatasetKind::mnist;
  const int radius = (spec.level == Level::set0) ? 0
                     : (!mnist && (spec.level == Level::set3 || spec.level == Level::set4)) ? 2
                                                                                              : 1;
  std::vector<Variant> out;
  const auto offsets = shifts(radius);
  for (const auto& [dx, dy] : offsets) out.push_back({dx, dy, 0.0, 20, 20, spec.order});

  const bool rotations = spec.level == Level::set2 || spec.level == Level::set4;
  const bool rescalings = mnist && (spec.level == Level::set3 || spec.level == Level::set4);
  if (rotations) {
    for (const auto& [dx, dy] : offsets) {
      for (double a : kAngles) out.push_back({dx, dy, a, 20, 20, spec.order});
    }
  }
  if (rescalings) {
    for (const auto& [dx, dy] : offsets) {
      for (const auto& s : kSizes) out.push_back({dx, dy, 0.0, s[0], s[1], spec.order});
    }
  }
  return out;
}

std::vector<Image> expand(const Image& base, const AugmentLevel& spec) {
  std::vector<Image> out;
  for (const auto& v : level_variants(spec)) out.push_back(v.apply(base));
  return out;
}

void for_each_augmented(const LabeledSet& base_train, const AugmentLevel& spec,
                        const std::function<void(int, const Image&)>& sink) {
  const auto variants = level_variants(spec);
  for (int d = 0; d < kClassCount; ++d) {
    for (const auto& image : base_train.images(d)) {
      for (const auto& v : variants) sink(d, v.apply(image));
    }
  }
}

LabeledSet build_level(const LabeledSet& base_train, const AugmentLevel& spec) {
  if (spec.level == Level::set0) return base_train;
  LabeledSet out;
  for_each_augmented(base_train, spec, [&](int d, const Image& image) { out.add(d, image); });
  return out;
}

std::array<std::uint64_t, kClassCount> count_level(
    const std::array<std::uint64_t, kClassCount>& base_counts, const AugmentLevel& spec) {
  const auto per_base = static_cast<std::uint64_t>(level_variants(spec).size());
  std::array<std::uint64_t, kClassCount> out{};
  for (int d = 0; d < kClassCount; ++d) out[d] = base_counts[d] * per_base;
  return out;
}

std::vector<Variant> ext_variants(TransformOrder order) {
  std::vector<Variant> out;
  const auto offsets = shifts(2);
  for (double a : {0.0, -25.0, -5.0, 5.0, 25.0}) {
    for (const auto& [dx, dy] : offsets) out.push_back({dx, dy, a, 20, 20, order});
  }
  return out;
}

ExtendedImage build_ext(const Image& image, TransformOrder order) {
  ExtendedImage ext{image, {}};
  ext.variants.reserve(kExtVariants);
  if (order == TransformOrder::transform_first) {
    for (double a : {0.0, -25.0, -5.0, 5.0, 25.0}) {
      const Image rotated = rotate(image, a);
      for (const auto& [dx, dy] : shifts(2)) ext.variants.push_back(shift(rotated, dx, dy));
    }
  } else {
    for (const auto& v : ext_variants(order)) ext.variants.push_back(v.apply(image));
  }
  return ext;
}

}  // namespace wnn

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wnn/image.hpp"
#include "wnn/split.hpp"

namespace wnn {

/// Output(x, y) = input(x - dx, y - dy), zero filled; x is the column, y the
/// row. Throws ParameterError when |dx| or |dy| exceeds 2.
[[nodiscard]] Image shift(const Image& image, int dx, int dy);

/// Rotation by `degrees` (counter-clockwise as displayed) about the grid
/// centre (13.5, 13.5). Bilinear sampling, zero outside the grid, rounded
/// half up and clamped. Throws ParameterError outside [-45, 45].
[[nodiscard]] Image rotate(const Image& image, double degrees);

/// Resamples the central 20x20 block to new_width x new_height (bilinear)
/// and re-embeds it centred in an empty grid. Accepted sizes: (18,20),
/// (22,20), (20,18), (20,22).
[[nodiscard]] Image rescale_center(const Image& image, int new_width, int new_height);

enum class Level { set0, set1, set2, set3, set4 };

[[nodiscard]] Level parse_level(const std::string& name);
[[nodiscard]] std::string to_string(Level level);

/// Where rotations and rescalings sit relative to the shifts.
enum class TransformOrder {
  shift_first,   // transform each shifted image
  transform_first  // shift each transformed base image
};

struct AugmentLevel {
  DatasetKind dataset = DatasetKind::mnist;
  Level level = Level::set0;
  TransformOrder order = TransformOrder::shift_first;
};

/// One derived image: a shift plus at most one rotation or rescaling.
struct Variant {
  int dx = 0;
  int dy = 0;
  double degrees = 0.0;
  int width = 20;   // rescaled centre size; 20x20 means no rescaling
  int height = 20;
  TransformOrder order = TransformOrder::shift_first;

  [[nodiscard]] bool rescaled() const noexcept { return width != 20 || height != 20; }
  [[nodiscard]] Image apply(const Image& base) const;
  friend bool operator==(const Variant&, const Variant&) = default;
};

/// Variants generated from each base image, base first.
[[nodiscard]] std::vector<Variant> level_variants(const AugmentLevel& spec);

/// Expands one base image (lazy path used during classification).
[[nodiscard]] std::vector<Image> expand(const Image& base, const AugmentLevel& spec);

/// Materialises a level. Images of a digit are ordered by (base index,
/// variant index); ids number them 1.. within the digit.
[[nodiscard]] LabeledSet build_level(const LabeledSet& base_train, const AugmentLevel& spec);

/// Streams a level image by image without holding it in memory.
void for_each_augmented(const LabeledSet& base_train, const AugmentLevel& spec,
                        const std::function<void(int digit, const Image&)>& sink);

/// Per-digit image counts of a level, computed by enumerating variant
/// descriptors without producing pixels.
[[nodiscard]] std::array<std::uint64_t, kClassCount> count_level(
    const std::array<std::uint64_t, kClassCount>& base_counts, const AugmentLevel& spec);

inline constexpr int kExtVariants = 125;

/// A training image together with its shifted and rotated variants.
struct ExtendedImage {
  Image base;
  std::vector<Image> variants;
};

/// 25 shifts with max(|dx|,|dy|) <= 2 times rotations {0, -25, -5, 5, 25}.
/// By default the base is rotated before shifting; variants[0] == base.
[[nodiscard]] ExtendedImage build_ext(const Image& image,
                                      TransformOrder order = TransformOrder::transform_first);

[[nodiscard]] std::vector<Variant> ext_variants(TransformOrder order = TransformOrder::transform_first);

}  // namespace wnn

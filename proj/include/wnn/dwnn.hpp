#pragma once

#include <array>
#include <string>
#include <vector>

#include "wnn/augment.hpp"
#include "wnn/classifier.hpp"

namespace wnn {

/// Each training image of a Set-0 class packed with its 125 variants.
class ExtendedTrainingSet {
 public:
  ExtendedTrainingSet() = default;
  explicit ExtendedTrainingSet(const LabeledSet& set0,
                               TransformOrder order = TransformOrder::transform_first);

  [[nodiscard]] const std::vector<ReferenceSet>& references(int digit) const;
  void check_nonempty() const;

 private:
  std::array<std::vector<ReferenceSet>, kClassCount> classes_;
};

/// Packs build_ext(image) into lane blocks.
[[nodiscard]] ReferenceSet pack_ext(const Image& image,
                                    TransformOrder order = TransformOrder::transform_first);

/// d(B, A)^2: the p = 2 windowed power sum of B against A's extension.
[[nodiscard]] double dwnn_power(const QueryImage& b, const ReferenceSet& ext, int window_size,
                                WindowMinimaAccumulator& scratch);

/// d(B, A). Throws ContractViolation unless `ext` has 125 variants.
[[nodiscard]] double dwnn_image_distance(const Image& b, const ExtendedImage& ext, int window_size);

/// D(B, A^i)^2 = min over the class of d(B, A)^2, for every class.
[[nodiscard]] std::array<double, kClassCount> dwnn_class_powers(const Image& b,
                                                                const ExtendedTrainingSet& set0,
                                                                int window_size);

[[nodiscard]] int dwnn_classify(const Image& b, const ExtendedTrainingSet& set0, int window_size);

enum class Resolution { agreement, nn_tiebreak };

[[nodiscard]] std::string to_string(Resolution r);

struct HybridVerdict {
  int wnn_digit = 0;
  int dwnn_digit = 0;
  int final_digit = 0;
  Resolution resolved_by = Resolution::agreement;
  friend bool operator==(const HybridVerdict&, const HybridVerdict&) = default;
};

/// Combines the two predictions; on disagreement the class with the smaller
/// NN power sum over its Set-4 images wins (lower digit on a tie).
[[nodiscard]] HybridVerdict resolve_hybrid(int wnn_digit, int dwnn_digit,
                                           const std::array<double, kClassCount>& nn_power_sums);

/// WNN over Set 4 and DWNN over Set 0, resolved by NN (p = 2) over the two
/// candidate classes of Set 4.
[[nodiscard]] HybridVerdict hybrid_classify(const Image& b, const ExtendedTrainingSet& set0,
                                            const TrainingSet& set4, int window_size);

}  // namespace wnn

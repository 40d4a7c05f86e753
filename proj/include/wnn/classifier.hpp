#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "wnn/image.hpp"
#include "wnn/kernel.hpp"

namespace wnn {

inline constexpr int kDefaultWindowSize = 11;
inline constexpr int kDefaultThreshold = 128;

struct ClassifierConfig {
  int window_size = kDefaultWindowSize;
  Exponent p{2.0};
  WindowMask excluded;  // 0-based window indices
  bool binarized = false;
  int threshold = kDefaultThreshold;

  /// Throws ParameterError for an even or non-positive window size or a
  /// threshold outside [1,255], ContractViolation if all windows are excluded.
  void validate() const;
  /// The image as the classifier sees it (binarized when requested).
  [[nodiscard]] Image prepare(const Image& image) const;
};

/// Packed per-class reference images. Binarization, when configured, is
/// applied once here.
class TrainingSet {
 public:
  TrainingSet() = default;
  explicit TrainingSet(const LabeledSet& set, bool binarized = false,
                       int threshold = kDefaultThreshold);

  [[nodiscard]] const ReferenceSet& references(int digit) const;
  [[nodiscard]] std::size_t size(int digit) const { return references(digit).size(); }
  [[nodiscard]] bool binarized() const noexcept { return binarized_; }
  [[nodiscard]] int threshold() const noexcept { return threshold_; }
  /// Throws ContractViolation naming the first empty class.
  void check_nonempty() const;

 private:
  std::array<ReferenceSet, kClassCount> classes_;
  bool binarized_ = false;
  int threshold_ = kDefaultThreshold;
};

struct DistanceProfile {
  std::array<double, kClassCount> distance{};   // Dist_p per class
  std::array<double, kClassCount> power_sum{};  // Dist_p^p per class
};

struct Classification {
  int digit = 0;
  DistanceProfile profile;
};

/// Per-window minima over `cls` of the window p-th-power sums.
[[nodiscard]] WindowMinimaAccumulator class_minima(const Image& b, const ReferenceSet& cls,
                                                   int window_size, const Exponent& p);

/// dist_{W,p}(B, cls) for every window W.
[[nodiscard]] WindowValues local_distances(const Image& b, std::span<const Image> cls,
                                           int window_size, const Exponent& p);

/// dist_{W,p}(B, cls) for one 0-based window index.
[[nodiscard]] double local_distance(const Image& b, std::span<const Image> cls, int window,
                                    int window_size, const Exponent& p);

/// Dist_p(B, cls) over the windows not excluded by `config`. Binarization
/// in `config` is applied to B and cls.
[[nodiscard]] double global_distance(const Image& b, std::span<const Image> cls,
                                     const ClassifierConfig& config);

/// Smallest-distance class; ties go to the lower digit.
[[nodiscard]] Classification classify(const Image& b, const TrainingSet& train,
                                      const ClassifierConfig& config);

/// Full-image nearest neighbour under L^p; ties go to the lower digit.
[[nodiscard]] int classify_nn(const Image& b, const TrainingSet& train, const Exponent& p);
[[nodiscard]] int classify_nn(const Image& b, const TrainingSet& train, const Exponent& p,
                              std::array<double, kClassCount>& power_sums);

/// Log-likelihood of B under the class model, up to the normalising
/// constant: -Dist(B, cls)^2 / (2 sigma^2) with p = 2.
[[nodiscard]] double likelihood_score(const Image& b, std::span<const Image> cls, int window_size,
                                      double sigma);

/// Index of the smallest value; the first one wins ties.
[[nodiscard]] int argmin_class(const std::array<double, kClassCount>& values) noexcept;

/// 0-based window index of the centre (row, col).
[[nodiscard]] constexpr int window_index(int row, int col) noexcept { return row * kSide + col; }

}  // namespace wnn

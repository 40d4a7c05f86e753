#include "wnn/dwnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wnn/error.hpp"

namespace wnn {

ReferenceSet pack_ext(const Image& image, TransformOrder order) {
  return ReferenceSet(build_ext(image, order).variants);
}

ExtendedTrainingSet::ExtendedTrainingSet(const LabeledSet& set0, TransformOrder order) {
  for (int d = 0; d < kClassCount; ++d) {
    auto& refs = classes_[static_cast<std::size_t>(d)];
    refs.reserve(set0.size(d));
    for (const auto& image : set0.images(d)) refs.push_back(pack_ext(image, order));
  }
}

const std::vector<ReferenceSet>& ExtendedTrainingSet::references(int digit) const {
  check_digit(digit);
  return classes_[static_cast<std::size_t>(digit)];
}

void ExtendedTrainingSet::check_nonempty() const {
  for (int d = 0; d < kClassCount; ++d) {
    if (classes_[static_cast<std::size_t>(d)].empty()) {
      throw ContractViolation("training class " + std::to_string(d) + " is empty");
    }
  }
}

double dwnn_power(const QueryImage& b, const ReferenceSet& ext, int window_size,
                  WindowMinimaAccumulator& scratch) {
  if (ext.size() != static_cast<std::size_t>(kExtVariants)) {
    throw ContractViolation("extended image needs 125 variants, got " + std::to_string(ext.size()));
  }
  if (scratch.window_size() != window_size || scratch.exponent() != Exponent(2.0)) {
    scratch = WindowMinimaAccumulator(window_size, Exponent(2.0));
  }
  scratch.reset();
  scratch.update(b, ext);
  return scratch.power_sum();
}

double dwnn_image_distance(const Image& b, const ExtendedImage& ext, int window_size) {
  if (ext.variants.size() != static_cast<std::size_t>(kExtVariants)) {
    throw ContractViolation("extended image needs 125 variants, got " +
                            std::to_string(ext.variants.size()));
  }
  check_window_size(window_size);
  WindowMinimaAccumulator acc(window_size, Exponent(2.0));
  return std::sqrt(dwnn_power(make_query(b), ReferenceSet(ext.variants), window_size, acc));
}

std::array<double, kClassCount> dwnn_class_powers(const Image& b, const ExtendedTrainingSet& set0,
                                                  int window_size) {
  check_window_size(window_size);
  set0.check_nonempty();
  const QueryImage query = make_query(b);
  WindowMinimaAccumulator acc(window_size, Exponent(2.0));
  std::array<double, kClassCount> out{};
  for (int d = 0; d < kClassCount; ++d) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ext : set0.references(d)) best = std::min(best, dwnn_power(query, ext, window_size, acc));
    out[static_cast<std::size_t>(d)] = best;
  }
  return out;
}

int dwnn_classify(const Image& b, const ExtendedTrainingSet& set0, int window_size) {
  return argmin_class(dwnn_class_powers(b, set0, window_size));
}

std::string to_string(Resolution r) {
  return r == Resolution::agreement ? "agreement" : "nn_tiebreak";
}

HybridVerdict resolve_hybrid(int wnn_digit, int dwnn_digit,
                             const std::array<double, kClassCount>& nn_power_sums) {
  check_digit(wnn_digit);
  check_digit(dwnn_digit);
  HybridVerdict v{wnn_digit, dwnn_digit, wnn_digit, Resolution::agreement};
  if (wnn_digit == dwnn_digit) return v;
  const int lo = std::min(wnn_digit, dwnn_digit);
  const int hi = std::max(wnn_digit, dwnn_digit);
  v.final_digit = nn_power_sums[static_cast<std::size_t>(hi)] <
                          nn_power_sums[static_cast<std::size_t>(lo)]
                      ? hi
                      : lo;
  v.resolved_by = Resolution::nn_tiebreak;
  return v;
}

HybridVerdict hybrid_classify(const Image& b, const ExtendedTrainingSet& set0,
                              const TrainingSet& set4, int window_size) {
  ClassifierConfig config;
  config.window_size = window_size;
  const int wnn_digit = classify(b, set4, config).digit;
  const int dwnn_digit = dwnn_classify(b, set0, window_size);
  std::array<double, kClassCount> nn{};
  if (wnn_digit != dwnn_digit) {
    const QueryImage query = make_query(b);
    for (int d : {wnn_digit, dwnn_digit}) {
      nn[static_cast<std::size_t>(d)] = min_full_power_distance(query, set4.references(d), Exponent(2.0));
    }
  }
  return resolve_hybrid(wnn_digit, dwnn_digit, nn);
}

}  // namespace wnn

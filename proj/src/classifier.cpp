#include "wnn/classifier.hpp"

#include <cmath>

#include "wnn/error.hpp"

namespace wnn {
namespace {

ReferenceSet pack(std::span<const Image> images, const ClassifierConfig& config) {
  ReferenceSet refs;
  for (const auto& image : images) refs.append(config.prepare(image));
  return refs;
}

}  // namespace

void ClassifierConfig::validate() const {
  check_window_size(window_size);
  if (binarized && (threshold < 1 || threshold > 255)) {
    throw ParameterError("binarization threshold must lie in [1,255], got " +
                         std::to_string(threshold));
  }
  if (excluded.all()) throw ContractViolation("all 784 windows are excluded");
}

Image ClassifierConfig::prepare(const Image& image) const {
  return binarized ? binarize(image, threshold) : image;
}

TrainingSet::TrainingSet(const LabeledSet& set, bool binarized, int threshold)
    : binarized_(binarized), threshold_(threshold) {
  for (int d = 0; d < kClassCount; ++d) {
    auto& refs = classes_[static_cast<std::size_t>(d)];
    if (binarized) {
      for (const auto& image : set.images(d)) refs.append(binarize(image, threshold));
    } else {
      refs.append(set.images(d));
    }
  }
}

const ReferenceSet& TrainingSet::references(int digit) const {
  check_digit(digit);
  return classes_[static_cast<std::size_t>(digit)];
}

void TrainingSet::check_nonempty() const {
  for (int d = 0; d < kClassCount; ++d) {
    if (classes_[static_cast<std::size_t>(d)].empty()) {
      throw ContractViolation("training class " + std::to_string(d) + " is empty");
    }
  }
}

WindowMinimaAccumulator class_minima(const Image& b, const ReferenceSet& cls, int window_size,
                                     const Exponent& p) {
  if (cls.empty()) throw ContractViolation("class has no images");
  WindowMinimaAccumulator acc(window_size, p);
  acc.update(make_query(b), cls);
  return acc;
}

WindowValues local_distances(const Image& b, std::span<const Image> cls, int window_size,
                             const Exponent& p) {
  WindowValues out = class_minima(b, ReferenceSet(cls), window_size, p).minima();
  for (auto& v : out) v = p.root(v);
  return out;
}

double local_distance(const Image& b, std::span<const Image> cls, int window, int window_size,
                      const Exponent& p) {
  if (window < 0 || window >= kPixelCount) {
    throw ParameterError("window index must lie in [0,783], got " + std::to_string(window));
  }
  return local_distances(b, cls, window_size, p)[static_cast<std::size_t>(window)];
}

double global_distance(const Image& b, std::span<const Image> cls, const ClassifierConfig& config) {
  config.validate();
  const auto acc = class_minima(config.prepare(b), pack(cls, config), config.window_size, config.p);
  return config.p.root(acc.power_sum(config.excluded));
}

int argmin_class(const std::array<double, kClassCount>& values) noexcept {
  int best = 0;
  for (int d = 1; d < kClassCount; ++d) {
    if (values[static_cast<std::size_t>(d)] < values[static_cast<std::size_t>(best)]) best = d;
  }
  return best;
}

Classification classify(const Image& b, const TrainingSet& train, const ClassifierConfig& config) {
  config.validate();
  train.check_nonempty();
  if (train.binarized() != config.binarized ||
      (config.binarized && train.threshold() != config.threshold)) {
    throw ContractViolation("training set binarization does not match the classifier config");
  }
  const QueryImage query = make_query(config.prepare(b));
  WindowMinimaAccumulator acc(config.window_size, config.p);
  Classification result;
  for (int d = 0; d < kClassCount; ++d) {
    acc.reset();
    acc.update(query, train.references(d));
    const double s = acc.power_sum(config.excluded);
    result.profile.power_sum[static_cast<std::size_t>(d)] = s;
    result.profile.distance[static_cast<std::size_t>(d)] = config.p.root(s);
  }
  result.digit = argmin_class(result.profile.power_sum);
  return result;
}

int classify_nn(const Image& b, const TrainingSet& train, const Exponent& p,
                std::array<double, kClassCount>& power_sums) {
  train.check_nonempty();
  const QueryImage query =
      make_query(train.binarized() ? binarize(b, train.threshold()) : b);
  for (int d = 0; d < kClassCount; ++d) {
    power_sums[static_cast<std::size_t>(d)] = min_full_power_distance(query, train.references(d), p);
  }
  return argmin_class(power_sums);
}

int classify_nn(const Image& b, const TrainingSet& train, const Exponent& p) {
  std::array<double, kClassCount> sums{};
  return classify_nn(b, train, p, sums);
}

double likelihood_score(const Image& b, std::span<const Image> cls, int window_size, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("sigma must be positive, got " + std::to_string(sigma));
  }
  ClassifierConfig config;
  config.window_size = window_size;
  const auto acc = class_minima(b, ReferenceSet(cls), window_size, config.p);
  return -acc.power_sum() / (2.0 * sigma * sigma);
}

}  // namespace wnn

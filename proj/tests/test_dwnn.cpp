#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "toy.hpp"
#include "wnn/dwnn.hpp"
#include "wnn/error.hpp"

using namespace wnn;

namespace {

Image centred_toy(std::mt19937_64& rng) {
  Image image;
  std::uniform_int_distribution<int> v(0, 255);
  for (int r = 10; r < 18; ++r) {
    for (int c = 10; c < 18; ++c) image.set(r, c, static_cast<std::uint8_t>(v(rng) & 0xF0));
  }
  return image;
}

std::vector<oracle::Grid> grids(const std::vector<Image>& images) {
  std::vector<oracle::Grid> out;
  for (const auto& image : images) out.push_back(oracle::from_image(image));
  return out;
}

}  // namespace

TEST_CASE("dwnn image distance matches the oracle over variants") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 3; ++trial) {
    const Image a = centred_toy(rng);
    const Image b = centred_toy(rng);
    const ExtendedImage ext = build_ext(a);
    const double expected = oracle::global_power(oracle::from_image(b), grids(ext.variants), 3, 2.0);
    CHECK(dwnn_image_distance(b, ext, 3) == doctest::Approx(std::sqrt(expected)).epsilon(1e-15));
    ClassifierConfig config;
    config.window_size = 3;
    // d(B, A) <= Dist(B, {A})
    CHECK(dwnn_image_distance(b, ext, 3) <= global_distance(b, std::vector<Image>{a}, config));
    CHECK(dwnn_image_distance(ext.variants[17], ext, 3) == 0.0);
  }
}

TEST_CASE("degenerate extension equals the plain windowed distance") {
  std::mt19937_64 rng(42);
  const Image a = centred_toy(rng);
  const Image b = centred_toy(rng);
  ExtendedImage ext{a, std::vector<Image>(125, a)};
  ClassifierConfig config;
  config.window_size = 5;
  CHECK(dwnn_image_distance(b, ext, 5) == global_distance(b, std::vector<Image>{a}, config));
  ext.variants.pop_back();
  CHECK_THROWS_AS((void)dwnn_image_distance(b, ext, 5), ContractViolation);
}

TEST_CASE("dwnn classification matches the oracle and bounds union-augmented WNN") {
  std::mt19937_64 rng(43);
  LabeledSet set0;
  for (int d = 0; d < 10; ++d) {
    for (int i = 0; i < 2; ++i) set0.add(d, centred_toy(rng));
  }
  const ExtendedTrainingSet ext(set0);
  for (int trial = 0; trial < 2; ++trial) {
    const Image b = centred_toy(rng);
    const auto powers = dwnn_class_powers(b, ext, 3);
    int best = 0;
    double best_v = 1e300;
    for (int d = 0; d < 10; ++d) {
      double class_best = 1e300;
      std::vector<Image> pooled;
      for (const auto& a : set0.images(d)) {
        const auto variants = build_ext(a).variants;
        class_best = std::min(class_best, oracle::global_power(oracle::from_image(b), grids(variants), 3, 2.0));
        pooled.insert(pooled.end(), variants.begin(), variants.end());
      }
      CHECK(powers[static_cast<std::size_t>(d)] == class_best);
      if (class_best < best_v) {
        best_v = class_best;
        best = d;
      }
      ClassifierConfig config;
      config.window_size = 3;
      // windowed distance to the pooled extensions never exceeds D
      CHECK(global_distance(b, pooled, config) <= std::sqrt(powers[static_cast<std::size_t>(d)]));
    }
    CHECK(dwnn_classify(b, ext, 3) == best);
  }
  CHECK(dwnn_classify(set0.images(3)[1], ext, 3) == 3);
}

TEST_CASE("hybrid resolution") {
  std::array<double, 10> nn{};
  nn.fill(100);
  const auto agree = resolve_hybrid(9, 9, nn);
  CHECK(agree.final_digit == 9);
  CHECK(agree.resolved_by == Resolution::agreement);
  nn[2] = 5;
  nn[6] = 7;
  const auto split = resolve_hybrid(6, 2, nn);
  CHECK(split.final_digit == 2);
  CHECK(split.resolved_by == Resolution::nn_tiebreak);
  nn[6] = 5;
  CHECK(resolve_hybrid(6, 2, nn).final_digit == 2);
}

TEST_CASE("hybrid on a constructed disagreement picks the NN class") {
  // Class 0 holds a shifted copy of the query: DWNN sees it exactly, WNN on
  // the unaugmented set prefers class 1 which matches most windows.
  std::mt19937_64 rng(44);
  Image q;
  for (int r = 10; r < 18; ++r) {
    for (int c = 10; c < 18; ++c) q.set(r, c, static_cast<std::uint8_t>(((r * 7 + c * 13) % 5) * 60));
  }
  LabeledSet set0;
  set0.add(0, shift(q, 2, 2));
  Image near = q;
  near.set(13, 13, static_cast<std::uint8_t>(255 - q.at(13, 13)));
  set0.add(1, near);
  for (int d = 2; d < 10; ++d) set0.add(d, centred_toy(rng));
  const ExtendedTrainingSet ext(set0);
  const TrainingSet plain(set0);
  const auto verdict = hybrid_classify(q, ext, plain, 3);
  CHECK(verdict.dwnn_digit == 0);
  CHECK(verdict.wnn_digit == 1);
  CHECK(verdict.resolved_by == Resolution::nn_tiebreak);
  // NN oracle over the two classes
  const double d0 = oracle::full_power(oracle::from_image(q), oracle::from_image(set0.images(0)[0]), 2.0);
  const double d1 = oracle::full_power(oracle::from_image(q), oracle::from_image(near), 2.0);
  CHECK(verdict.final_digit == (d0 < d1 ? 0 : 1));
  CHECK((verdict.final_digit == verdict.wnn_digit || verdict.final_digit == verdict.dwnn_digit));
}

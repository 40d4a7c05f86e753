#include <filesystem>
#include <random>

#include "doctest.h"
#include "wnn/error.hpp"
#include "wnn/idx.hpp"
#include "wnn/split.hpp"

using namespace wnn;

namespace {

Image random_image(std::mt19937_64& rng) {
  Image image;
  std::uniform_int_distribution<int> v(0, 255);
  for (auto& p : image.pixels()) p = static_cast<std::uint8_t>(v(rng));
  return image;
}

std::vector<LabeledImage> random_items(std::mt19937_64& rng, std::size_t n) {
  std::vector<LabeledImage> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back({random_image(rng), static_cast<int>(i % 10)});
  return items;
}

void put_be32(std::vector<std::uint8_t>& bytes, std::size_t offset, std::uint32_t v) {
  bytes[offset] = static_cast<std::uint8_t>(v >> 24);
  bytes[offset + 1] = static_cast<std::uint8_t>(v >> 16);
  bytes[offset + 2] = static_cast<std::uint8_t>(v >> 8);
  bytes[offset + 3] = static_cast<std::uint8_t>(v);
}

std::string parse_error(const std::vector<std::uint8_t>& images, const std::vector<std::uint8_t>& labels) {
  try {
    (void)parse_idx(images, labels);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

// Per digit, `train[d]` images in the training file and `test[d]` in the test file.
RawDataset synthetic_raw(const std::array<int, 10>& train, const std::array<int, 10>& test) {
  RawDataset raw;
  std::uint8_t tag = 0;
  for (int d = 0; d < 10; ++d) {
    for (int i = 0; i < train[d]; ++i) {
      Image image;
      image.set(0, 0, static_cast<std::uint8_t>(d));
      image.set(0, 1, static_cast<std::uint8_t>(i % 256));
      image.set(0, 2, tag++);
      raw.train_file.push_back({image, d});
    }
    for (int i = 0; i < test[d]; ++i) {
      Image image;
      image.set(1, 0, static_cast<std::uint8_t>(d));
      image.set(1, 1, static_cast<std::uint8_t>(i % 256));
      raw.test_file.push_back({image, d});
    }
  }
  return raw;
}

}  // namespace

TEST_CASE("image reads outside the grid return zero") {
  Image image;
  image.set(0, 0, 9);
  CHECK(image.at(0, 0) == 9);
  CHECK(image.at(-1, 0) == 0);
  CHECK(image.at(0, 28) == 0);
  CHECK(image.at(100, -100) == 0);
  CHECK_THROWS_AS(image.set(28, 0, 1), ParameterError);
  CHECK_THROWS_AS(Image::from_bytes(std::vector<std::uint8_t>(783)), ParameterError);
}

TEST_CASE("idx round trip preserves images and labels") {
  std::mt19937_64 rng(1);
  const auto items = random_items(rng, 37);
  const auto back = parse_idx(encode_idx_images(items), encode_idx_labels(items));
  CHECK(back == items);

  const auto dir = std::filesystem::temp_directory_path() / "wnn_idx_test";
  std::filesystem::create_directories(dir);
  write_idx(dir / "i", dir / "l", items);
  CHECK(load_idx(dir / "i", dir / "l") == items);
  {
    IdxWriter writer(dir / "si", dir / "sl");
    for (const auto& item : items) writer.write(item.image, item.label);
    writer.close();
    CHECK(writer.count() == items.size());
  }
  CHECK(load_idx(dir / "si", dir / "sl") == items);
  std::filesystem::remove_all(dir);
}

TEST_CASE("idx two image file parses in order") {
  std::mt19937_64 rng(2);
  auto items = random_items(rng, 2);
  items[0].label = 7;
  items[1].label = 3;
  const auto back = parse_idx(encode_idx_images(items), encode_idx_labels(items));
  REQUIRE(back.size() == 2);
  CHECK(back[0].label == 7);
  CHECK(back[1].label == 3);
  CHECK(back[1].image == items[1].image);
}

TEST_CASE("idx errors name the offending field") {
  std::mt19937_64 rng(3);
  const auto items = random_items(rng, 3);
  const auto images = encode_idx_images(items);
  const auto labels = encode_idx_labels(items);

  auto bad_label_magic = labels;
  put_be32(bad_label_magic, 0, 0x803);
  CHECK(parse_error(images, bad_label_magic).find("bad label magic") == 0);

  auto bad_image_magic = images;
  put_be32(bad_image_magic, 0, 0x801);
  CHECK(parse_error(bad_image_magic, labels).find("bad image magic") == 0);

  auto bad_rows = images;
  put_be32(bad_rows, 8, 27);
  CHECK(parse_error(bad_rows, labels).find("bad rows") == 0);

  auto bad_cols = images;
  put_be32(bad_cols, 12, 29);
  CHECK(parse_error(bad_cols, labels).find("bad cols") == 0);

  auto mismatch = labels;
  put_be32(mismatch, 4, 2);
  mismatch.pop_back();
  CHECK(parse_error(images, mismatch).find("count mismatch") == 0);

  auto truncated = images;
  truncated.pop_back();
  CHECK(parse_error(truncated, labels).find("truncated image file") == 0);

  auto truncated_labels = labels;
  truncated_labels.pop_back();
  CHECK(parse_error(images, truncated_labels).find("truncated label file") == 0);

  auto bad_value = labels;
  bad_value.back() = 10;
  CHECK(parse_error(images, bad_value).find("bad label value") == 0);

  CHECK_THROWS_AS((void)load_idx("/nonexistent/x", "/nonexistent/y"), ParseError);
}

TEST_CASE("orient_emnist transposes") {
  Image image;
  image.set(3, 17, 200);
  const Image t = orient_emnist(image);
  CHECK(t.at(17, 3) == 200);
  CHECK(t.at(3, 17) == 0);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const Image x = random_image(rng);
    CHECK(orient_emnist(orient_emnist(x)) == x);
    Image sym;
    for (int r = 0; r < 28; ++r) {
      for (int c = 0; c <= r; ++c) {
        sym.set(r, c, x.at(r, c));
        sym.set(c, r, x.at(r, c));
      }
    }
    CHECK(orient_emnist(sym) == sym);
  }
}

TEST_CASE("binarize thresholds to 0 and 255") {
  Image image;
  image.set(0, 0, 0);
  image.set(0, 1, 127);
  image.set(0, 2, 128);
  image.set(0, 3, 255);
  const Image b = binarize(image, 128);
  CHECK(b.at(0, 0) == 0);
  CHECK(b.at(0, 1) == 0);
  CHECK(b.at(0, 2) == 255);
  CHECK(b.at(0, 3) == 255);
  CHECK(binarize(Image{}, 77) == Image{});
  std::mt19937_64 rng(5);
  for (int t : {1, 64, 128, 255}) {
    const Image x = random_image(rng);
    CHECK(binarize(binarize(x, t), t) == binarize(x, t));
  }
  CHECK_THROWS_AS((void)binarize(image, 0), ParameterError);
  CHECK_THROWS_AS((void)binarize(image, 256), ParameterError);
}

TEST_CASE("balanced and standard splits follow the per-digit enumeration") {
  std::array<int, 10> train{}, test{};
  train.fill(6010);
  test.fill(20);
  train[1] = 6742;
  test[1] = 1135;
  const RawDataset raw = synthetic_raw(train, test);

  SplitSpec balanced;
  const Split b = build_split(balanced, raw);
  CHECK(b.train.size(0) == 6000);
  CHECK(b.test.size(0) == 30);
  CHECK(b.train.size(1) == 6000);
  CHECK(b.test.size(1) == 1877);
  CHECK(b.test.at(0).ids.front() == 6001);
  CHECK(b.test.at(0).ids.back() == 6030);
  // positions 6011.. come from the test file
  CHECK(b.test.images(0)[10].at(1, 0) == 0);
  CHECK(b.test.images(0)[10].at(1, 1) == 0);
  CHECK(b.test.images(0)[9].at(0, 2) != 0);

  SplitSpec standard;
  standard.scheme = SplitScheme::standard;
  const Split s = build_split(standard, raw);
  CHECK(s.train.size(1) == 6742);
  CHECK(s.test.size(1) == 1135);
  CHECK(s.test.at(1).ids.front() == 6743);
  CHECK(s.test.at(1).ids.back() == 7877);

  const Split c = build_split(SplitSpec::custom(DatasetKind::mnist, IndexRange::parse("1:4000"),
                                                IndexRange::parse("4001:5000")),
                              raw);
  for (int d = 0; d < 10; ++d) {
    CHECK(c.train.size(d) == 4000);
    CHECK(c.test.size(d) == 1000);
  }
}

TEST_CASE("split errors name digit and bound") {
  std::array<int, 10> train{}, test{};
  train.fill(100);
  test.fill(10);
  train[4] = 50;
  const RawDataset raw = synthetic_raw(train, test);
  try {
    (void)build_split(SplitSpec::custom(DatasetKind::mnist, IndexRange::parse("1:80"),
                                        IndexRange::parse("81:")),
                      raw);
    FAIL("expected a split error");
  } catch (const SplitError& e) {
    const std::string what = e.what();
    CHECK(what.find("digit 4") != std::string::npos);
    CHECK(what.find("60") != std::string::npos);
  }
  CHECK_THROWS_AS((void)build_split(SplitSpec::custom(DatasetKind::mnist, IndexRange::parse("1:20"),
                                                      IndexRange::parse("10:30")),
                                    raw),
                  SplitError);
  CHECK_THROWS_AS((void)IndexRange::parse("0:5"), ParameterError);
  CHECK_THROWS_AS((void)IndexRange::parse("7:5"), ParameterError);
  CHECK_THROWS_AS((void)IndexRange::parse("x"), ParameterError);
  CHECK(IndexRange::parse("6001:end") == IndexRange{6001, std::nullopt});
}

TEST_CASE("emnist balanced split takes 24000 per digit") {
  std::array<int, 10> train{}, test{};
  train.fill(24000);
  test.fill(4000);
  RawDataset raw = synthetic_raw(train, test);
  raw.kind = DatasetKind::emnist_digits;
  SplitSpec spec;
  spec.dataset = DatasetKind::emnist_digits;
  const Split s = build_split(spec, raw);
  CHECK(s.train.total() == 240000);
  CHECK(s.test.total() == 40000);
}

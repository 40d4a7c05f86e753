#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wnn/idx.hpp"
#include "wnn/image.hpp"

namespace wnn {

enum class DatasetKind { mnist, emnist_digits };
enum class SplitScheme { standard, balanced, custom };

[[nodiscard]] DatasetKind parse_dataset_kind(const std::string& name);
[[nodiscard]] std::string to_string(DatasetKind kind);
[[nodiscard]] SplitScheme parse_split_scheme(const std::string& name);
[[nodiscard]] std::string to_string(SplitScheme scheme);

/// 1-based inclusive range of per-digit image positions. An absent `last`
/// runs to the final image of the digit.
struct IndexRange {
  std::uint32_t first = 1;
  std::optional<std::uint32_t> last;

  /// Accepts "a:b" or "a:" / "a:end".
  static IndexRange parse(const std::string& text);
  [[nodiscard]] std::string str() const;
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct SplitSpec {
  DatasetKind dataset = DatasetKind::mnist;
  SplitScheme scheme = SplitScheme::balanced;
  // Used when scheme == custom; one entry per digit.
  std::array<IndexRange, kClassCount> train{};
  std::array<IndexRange, kClassCount> test{};

  /// Same custom ranges for every digit.
  static SplitSpec custom(DatasetKind dataset, IndexRange train, IndexRange test);
};

/// Both files of a dataset in load order. EMNIST images are already
/// transposed into display orientation by `load_dataset`.
struct RawDataset {
  DatasetKind kind = DatasetKind::mnist;
  std::vector<LabeledImage> train_file;
  std::vector<LabeledImage> test_file;
};

/// Conventional file names inside a data directory.
struct DatasetFiles {
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  static DatasetFiles in_directory(DatasetKind kind, const std::filesystem::path& dir);
};

[[nodiscard]] RawDataset load_dataset(DatasetKind kind, const DatasetFiles& files);

struct Split {
  LabeledSet train;
  LabeledSet test;
};

/// Enumerates each digit's images in dataset order (training file first,
/// then test file) and cuts them into the requested train/test ranges.
/// Throws SplitError when a range exceeds the images available for a digit
/// or when train and test ranges overlap.
[[nodiscard]] Split build_split(const SplitSpec& spec, const RawDataset& raw);

}  // namespace wnn

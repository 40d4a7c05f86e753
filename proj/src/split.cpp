#include "wnn/split.hpp"

#include <algorithm>

#include "wnn/error.hpp"

namespace wnn {

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "mnist") return DatasetKind::mnist;
  if (name == "emnist" || name == "emnist-digits") return DatasetKind::emnist_digits;
  throw ParameterError("unknown dataset '" + name + "' (expected mnist or emnist-digits)");
}

std::string to_string(DatasetKind kind) {
  return kind == DatasetKind::mnist ? "mnist" : "emnist-digits";
}

SplitScheme parse_split_scheme(const std::string& name) {
  if (name == "standard") return SplitScheme::standard;
  if (name == "balanced") return SplitScheme::balanced;
  if (name == "custom") return SplitScheme::custom;
  throw ParameterError("unknown split scheme '" + name +
                       "' (expected standard, balanced or custom)");
}

std::string to_string(SplitScheme scheme) {
  switch (scheme) {
    case SplitScheme::standard: return "standard";
    case SplitScheme::balanced: return "balanced";
    case SplitScheme::custom: return "custom";
  }
  return "?";
}

IndexRange IndexRange::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ParameterError("index range '" + text + "' must look like first:last or first:");
  }
  const std::string a = text.substr(0, colon);
  const std::string b = text.substr(colon + 1);
  auto number = [&](const std::string& s) -> std::uint32_t {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      throw ParameterError("index range '" + text + "' has a non-numeric bound");
    }
    return static_cast<std::uint32_t>(std::stoul(s));
  };
  IndexRange range;
  range.first = number(a);
  if (!b.empty() && b != "end") range.last = number(b);
  if (range.first == 0) throw ParameterError("index range '" + text + "' is 1-based");
  if (range.last && *range.last < range.first) {
    throw ParameterError("index range '" + text + "' is empty");
  }
  return range;
}

std::string IndexRange::str() const {
  return std::to_string(first) + ":" + (last ? std::to_string(*last) : std::string("end"));
}

SplitSpec SplitSpec::custom(DatasetKind dataset, IndexRange train, IndexRange test) {
  SplitSpec spec;
  spec.dataset = dataset;
  spec.scheme = SplitScheme::custom;
  spec.train.fill(train);
  spec.test.fill(test);
  return spec;
}

DatasetFiles DatasetFiles::in_directory(DatasetKind kind, const std::filesystem::path& dir) {
  if (kind == DatasetKind::mnist) {
    return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
            dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
  }
  return {dir / "emnist-digits-train-images-idx3-ubyte",
          dir / "emnist-digits-train-labels-idx1-ubyte",
          dir / "emnist-digits-test-images-idx3-ubyte",
          dir / "emnist-digits-test-labels-idx1-ubyte"};
}

RawDataset load_dataset(DatasetKind kind, const DatasetFiles& files) {
  RawDataset raw;
  raw.kind = kind;
  raw.train_file = load_idx(files.train_images, files.train_labels);
  raw.test_file = load_idx(files.test_images, files.test_labels);
  if (kind == DatasetKind::emnist_digits) {
    orient_all(raw.train_file);
    orient_all(raw.test_file);
  }
  return raw;
}

Split build_split(const SplitSpec& spec, const RawDataset& raw) {
  std::array<std::vector<const Image*>, kClassCount> enumerated;
  std::array<std::uint32_t, kClassCount> in_train_file{};
  for (const auto& item : raw.train_file) {
    enumerated[static_cast<std::size_t>(item.label)].push_back(&item.image);
    ++in_train_file[static_cast<std::size_t>(item.label)];
  }
  for (const auto& item : raw.test_file) {
    enumerated[static_cast<std::size_t>(item.label)].push_back(&item.image);
  }

  Split split;
  for (int d = 0; d < kClassCount; ++d) {
    const auto available = static_cast<std::uint32_t>(enumerated[static_cast<std::size_t>(d)].size());
    IndexRange train;
    IndexRange test;
    switch (spec.scheme) {
      case SplitScheme::standard:
        train = {1, in_train_file[static_cast<std::size_t>(d)]};
        test = {in_train_file[static_cast<std::size_t>(d)] + 1, available};
        break;
      case SplitScheme::balanced: {
        const std::uint32_t per_digit = spec.dataset == DatasetKind::mnist ? 6000 : 24000;
        train = {1, per_digit};
        test = {per_digit + 1, std::nullopt};
        break;
      }
      case SplitScheme::custom:
        train = spec.train[static_cast<std::size_t>(d)];
        test = spec.test[static_cast<std::size_t>(d)];
        break;
    }
    const std::uint32_t train_last = train.last.value_or(available);
    const std::uint32_t test_last = test.last.value_or(available);
    auto check = [&](const char* what, std::uint32_t first, std::uint32_t last) {
      if (first < 1 || last > available || (first > last && !(first == last + 1))) {
        throw SplitError("digit " + std::to_string(d) + ": " + what + " range " +
                         std::to_string(first) + ":" + std::to_string(last) +
                         " exceeds the " + std::to_string(available) + " available images");
      }
    };
    check("train", train.first, train_last);
    check("test", test.first, test_last);
    if (train.first <= test_last && test.first <= train_last) {
      throw SplitError("digit " + std::to_string(d) + ": train range " + train.str() +
                       " overlaps test range " + test.str());
    }
    const auto& images = enumerated[static_cast<std::size_t>(d)];
    for (std::uint32_t i = train.first; i <= train_last; ++i) split.train.add(d, *images[i - 1], i);
    for (std::uint32_t i = test.first; i <= test_last; ++i) split.test.add(d, *images[i - 1], i);
  }
  return split;
}

}  // namespace wnn

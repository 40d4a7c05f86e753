#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wnn/image.hpp"

namespace wnn {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct LabeledImage {
  Image image;
  int label = 0;
  friend bool operator==(const LabeledImage&, const LabeledImage&) = default;
};

/// Reads an IDX image file and its label file (MNIST / EMNIST layout:
/// big-endian header, 28x28 unsigned bytes per image). Images come back in
/// file order. Throws ParseError naming the offending field.
[[nodiscard]] std::vector<LabeledImage> load_idx(const std::filesystem::path& images_path,
                                                 const std::filesystem::path& labels_path);

/// Parses in-memory IDX buffers; `load_idx` reads the files and calls this.
[[nodiscard]] std::vector<LabeledImage> parse_idx(std::span<const std::uint8_t> image_bytes,
                                                  std::span<const std::uint8_t> label_bytes);

/// Serialises to IDX buffers.
[[nodiscard]] std::vector<std::uint8_t> encode_idx_images(std::span<const LabeledImage> items);
[[nodiscard]] std::vector<std::uint8_t> encode_idx_labels(std::span<const LabeledImage> items);

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               std::span<const LabeledImage> items);

/// Streams images to an IDX image/label pair without holding them in memory.
/// The header counts are patched in by `close()`.
class IdxWriter {
 public:
  IdxWriter(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);
  ~IdxWriter();
  IdxWriter(const IdxWriter&) = delete;
  IdxWriter& operator=(const IdxWriter&) = delete;

  void write(const Image& image, int label);
  void close();
  [[nodiscard]] std::uint64_t count() const noexcept { return count_; }

 private:
  struct Files;
  std::unique_ptr<Files> files_;
  std::uint64_t count_ = 0;
};

/// Flattens a labeled set in digit order (all 0s, then all 1s, ...).
[[nodiscard]] std::vector<LabeledImage> flatten(const LabeledSet& set);

/// Applies orient_emnist to every image.
void orient_all(std::vector<LabeledImage>& items);

[[nodiscard]] std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace wnn

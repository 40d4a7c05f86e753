#include "wnn/idx.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "wnn/error.hpp"

namespace wnn {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08X", v);
  return buf;
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<LabeledImage> parse_idx(std::span<const std::uint8_t> image_bytes,
                                    std::span<const std::uint8_t> label_bytes) {
  if (image_bytes.size() < 16) throw ParseError("truncated image file: header needs 16 bytes");
  if (label_bytes.size() < 8) throw ParseError("truncated label file: header needs 8 bytes");

  const std::uint32_t image_magic = read_be32(image_bytes, 0);
  if (image_magic != kIdxImageMagic) {
    throw ParseError("bad image magic: expected 0x00000803, got " + hex32(image_magic));
  }
  const std::uint32_t label_magic = read_be32(label_bytes, 0);
  if (label_magic != kIdxLabelMagic) {
    throw ParseError("bad label magic: expected 0x00000801, got " + hex32(label_magic));
  }
  const std::uint32_t image_count = read_be32(image_bytes, 4);
  const std::uint32_t rows = read_be32(image_bytes, 8);
  const std::uint32_t cols = read_be32(image_bytes, 12);
  const std::uint32_t label_count = read_be32(label_bytes, 4);
  if (rows != kSide) throw ParseError("bad rows: expected 28, got " + std::to_string(rows));
  if (cols != kSide) throw ParseError("bad cols: expected 28, got " + std::to_string(cols));
  if (image_count != label_count) {
    throw ParseError("count mismatch: image file holds " + std::to_string(image_count) +
                     " images, label file holds " + std::to_string(label_count) + " labels");
  }
  const std::size_t image_need = 16 + std::size_t{image_count} * kPixelCount;
  if (image_bytes.size() < image_need) {
    throw ParseError("truncated image file: need " + std::to_string(image_need) + " bytes, got " +
                     std::to_string(image_bytes.size()));
  }
  const std::size_t label_need = 8 + std::size_t{label_count};
  if (label_bytes.size() < label_need) {
    throw ParseError("truncated label file: need " + std::to_string(label_need) + " bytes, got " +
                     std::to_string(label_bytes.size()));
  }

  std::vector<LabeledImage> out;
  out.reserve(image_count);
  for (std::size_t i = 0; i < image_count; ++i) {
    const int label = label_bytes[8 + i];
    if (label >= kClassCount) {
      throw ParseError("bad label value " + std::to_string(label) + " at item " +
                       std::to_string(i));
    }
    out.push_back({Image::from_bytes(image_bytes.subspan(16 + i * kPixelCount, kPixelCount)),
                   label});
  }
  return out;
}

std::vector<LabeledImage> load_idx(const std::filesystem::path& images_path,
                                   const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);
  return parse_idx(images, labels);
}

std::vector<std::uint8_t> encode_idx_images(std::span<const LabeledImage> items) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + items.size() * kPixelCount);
  append_be32(out, kIdxImageMagic);
  append_be32(out, static_cast<std::uint32_t>(items.size()));
  append_be32(out, kSide);
  append_be32(out, kSide);
  for (const auto& item : items) {
    out.insert(out.end(), item.image.pixels().begin(), item.image.pixels().end());
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const LabeledImage> items) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + items.size());
  append_be32(out, kIdxLabelMagic);
  append_be32(out, static_cast<std::uint32_t>(items.size()));
  for (const auto& item : items) out.push_back(static_cast<std::uint8_t>(item.label));
  return out;
}

namespace {
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}
}  // namespace

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               std::span<const LabeledImage> items) {
  write_bytes(images_path, encode_idx_images(items));
  write_bytes(labels_path, encode_idx_labels(items));
}

struct IdxWriter::Files {
  std::ofstream images;
  std::ofstream labels;
};

IdxWriter::IdxWriter(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path)
    : files_(std::make_unique<Files>()) {
  files_->images.open(images_path, std::ios::binary | std::ios::trunc);
  files_->labels.open(labels_path, std::ios::binary | std::ios::trunc);
  if (!files_->images || !files_->labels) {
    throw Error("cannot write " + images_path.string() + " / " + labels_path.string());
  }
  std::vector<std::uint8_t> header;
  append_be32(header, kIdxImageMagic);
  append_be32(header, 0);
  append_be32(header, kSide);
  append_be32(header, kSide);
  files_->images.write(reinterpret_cast<const char*>(header.data()), 16);
  header.clear();
  append_be32(header, kIdxLabelMagic);
  append_be32(header, 0);
  files_->labels.write(reinterpret_cast<const char*>(header.data()), 8);
}

IdxWriter::~IdxWriter() {
  try {
    close();
  } catch (...) {
  }
}

void IdxWriter::write(const Image& image, int label) {
  check_digit(label);
  if (!files_) throw Error("IdxWriter already closed");
  files_->images.write(reinterpret_cast<const char*>(image.pixels().data()), kPixelCount);
  const char l = static_cast<char>(label);
  files_->labels.write(&l, 1);
  ++count_;
}

void IdxWriter::close() {
  if (!files_) return;
  if (count_ > 0xFFFFFFFFull) throw Error("IDX files hold at most 2^32-1 items");
  std::vector<std::uint8_t> n;
  append_be32(n, static_cast<std::uint32_t>(count_));
  files_->images.seekp(4);
  files_->images.write(reinterpret_cast<const char*>(n.data()), 4);
  files_->labels.seekp(4);
  files_->labels.write(reinterpret_cast<const char*>(n.data()), 4);
  const bool ok = static_cast<bool>(files_->images) && static_cast<bool>(files_->labels);
  files_.reset();
  if (!ok) throw Error("IDX write failed");
}

std::vector<LabeledImage> flatten(const LabeledSet& set) {
  std::vector<LabeledImage> out;
  out.reserve(set.total());
  for (int d = 0; d < kClassCount; ++d) {
    for (const auto& image : set.images(d)) out.push_back({image, d});
  }
  return out;
}

void orient_all(std::vector<LabeledImage>& items) {
  for (auto& item : items) item.image = orient_emnist(item.image);
}

}  // namespace wnn

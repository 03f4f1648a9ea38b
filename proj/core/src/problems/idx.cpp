#include "curveball/problems/idx.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "curveball/errors.hpp"

namespace curveball::problems {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset,
                        const char* what) {
  if (bytes.size() < offset + 4) {
    throw TruncatedFile(std::string(what) + ": header is truncated");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void expect_magic(std::span<const std::uint8_t> bytes, std::uint32_t magic, const char* what) {
  const std::uint32_t found = read_be32(bytes, 0, what);
  if (found != magic) {
    std::ostringstream msg;
    msg << what << ": bad magic 0x" << std::hex << found << ", expected 0x" << magic;
    throw BadMagic(msg.str());
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
  expect_magic(images, kIdxImagesMagic, "idx images");
  expect_magic(labels, kIdxLabelsMagic, "idx labels");

  const std::size_t count = read_be32(images, 4, "idx images");
  const std::size_t rows = read_be32(images, 8, "idx images");
  const std::size_t cols = read_be32(images, 12, "idx images");
  const std::size_t label_count = read_be32(labels, 4, "idx labels");

  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + count * pixels) throw TruncatedFile("idx images: payload is truncated");
  if (labels.size() < 8 + label_count) throw TruncatedFile("idx labels: payload is truncated");
  if (count != label_count) {
    throw CountMismatch("idx: " + std::to_string(count) + " images vs " +
                        std::to_string(label_count) + " labels");
  }

  Dataset data;
  data.features = Tensor({count, pixels});
  for (std::size_t i = 0; i < count * pixels; ++i) {
    data.features[i] = static_cast<double>(images[16 + i]) / 255.0;
  }
  data.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) data.labels[i] = labels[8 + i];
  data.classes =
      count == 0 ? 0 : *std::max_element(data.labels.begin(), data.labels.end()) + 1;
  return data;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto image_bytes = read_file(images);
  const auto label_bytes = read_file(labels);
  return parse_idx(image_bytes, label_bytes);
}

}  // namespace curveball::problems

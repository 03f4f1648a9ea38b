#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "curveball/problems/dataset.hpp"

namespace curveball::problems {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Loads an IDX image/label pair (MNIST layout). Pixels are scaled to [0, 1]
/// and each image is flattened to one row.
///
/// Throws BadMagic, TruncatedFile, CountMismatch, or IoError.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Same, from in-memory file contents.
Dataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);

}  // namespace curveball::problems

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace ff {

// Decoded IDX payload: big-endian header dims plus raw uint8 bytes.
struct IdxData {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;
};

// Parses an IDX byte stream (uint8 element type only, 1-D labels or 3-D
// images). A gzip wrapper is detected from the 0x1f 0x8b magic and inflated
// first. Failures raise structured errors: bad_format for a wrong magic,
// truncated for short payloads.
IdxData parse_idx(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
std::vector<std::uint8_t> gzip_inflate(std::span<const std::uint8_t> bytes);

// 3-D image file -> N x (rows*cols) matrix scaled into [0, 1].
Matrix idx_images_to_matrix(const IdxData& idx);

// 1-D label file -> integer labels.
std::vector<int> idx_labels(const IdxData& idx);

Matrix load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

}  // namespace ff

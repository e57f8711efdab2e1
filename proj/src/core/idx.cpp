#include "core/idx.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "core/error.hpp"

namespace ff {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;  // uint8, 3 dims
constexpr std::uint32_t kLabelMagic = 0x00000801;  // uint8, 1 dim

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::missing_file, "cannot open file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

std::vector<std::uint8_t> gzip_inflate(std::span<const std::uint8_t> bytes) {
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  // 15 + 16 selects gzip framing.
  if (inflateInit2(&zs, 15 + 16) != Z_OK) {
    raise(Errc::bad_format, "gzip: inflateInit failed");
  }
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());

  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> chunk(1 << 18);
  int rc = Z_OK;
  do {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      raise(Errc::bad_format, "gzip: corrupt stream (zlib rc " + std::to_string(rc) + ")");
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

IdxData parse_idx(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> inflated;
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    inflated = gzip_inflate(bytes);
    bytes = inflated;
  }
  if (bytes.size() < 4) {
    raise(Errc::truncated, "idx: stream shorter than the 4-byte magic");
  }
  const std::uint32_t magic = read_be32(bytes.data());
  if (magic != kImageMagic && magic != kLabelMagic) {
    raise(Errc::bad_format,
          "idx: unsupported magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%08x", magic);
            return std::string(buf);
          }() + " (expected 0x00000803 images or 0x00000801 labels)");
  }
  const std::size_t ndims = magic & 0xff;
  if (bytes.size() < 4 + 4 * ndims) {
    raise(Errc::truncated, "idx: truncated dimension header");
  }
  IdxData idx;
  std::size_t total = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    const std::uint32_t dim = read_be32(bytes.data() + 4 + 4 * d);
    idx.dims.push_back(dim);
    total *= dim;
  }
  const std::size_t payload = bytes.size() - 4 - 4 * ndims;
  if (payload < total) {
    raise(Errc::truncated, "idx: header promises " + std::to_string(total) +
                               " bytes but only " + std::to_string(payload) +
                               " present");
  }
  if (payload > total) {
    raise(Errc::bad_format, "idx: payload of " + std::to_string(payload) +
                                " bytes does not match header dimensions (" +
                                std::to_string(total) + ")");
  }
  idx.bytes.assign(bytes.begin() + 4 + 4 * ndims, bytes.end());
  return idx;
}

Matrix idx_images_to_matrix(const IdxData& idx) {
  if (idx.dims.size() != 3) {
    raise(Errc::bad_format, "idx: expected 3-D image file, got " +
                                std::to_string(idx.dims.size()) + " dims");
  }
  const std::size_t n = idx.dims[0];
  const std::size_t pixels = std::size_t(idx.dims[1]) * idx.dims[2];
  Matrix m(n, pixels);
  const double scale = 1.0 / 255.0;
  for (std::size_t i = 0; i < n * pixels; ++i) {
    m.data()[i] = idx.bytes[i] * scale;
  }
  return m;
}

std::vector<int> idx_labels(const IdxData& idx) {
  if (idx.dims.size() != 1) {
    raise(Errc::bad_format, "idx: expected 1-D label file, got " +
                                std::to_string(idx.dims.size()) + " dims");
  }
  return std::vector<int>(idx.bytes.begin(), idx.bytes.end());
}

Matrix load_idx_images(const std::string& path) {
  return idx_images_to_matrix(parse_idx(read_file_bytes(path)));
}

std::vector<int> load_idx_labels(const std::string& path) {
  return idx_labels(parse_idx(read_file_bytes(path)));
}

}  // namespace ff

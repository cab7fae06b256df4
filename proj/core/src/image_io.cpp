#include "mobi/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mobi/error.hpp"

namespace mobi {

namespace fs = std::filesystem;

namespace {

enum Tag : std::uint16_t {
  kImageWidth = 256,
  kImageLength = 257,
  kBitsPerSample = 258,
  kCompression = 259,
  kPhotometric = 262,
  kStripOffsets = 273,
  kSamplesPerPixel = 277,
  kRowsPerStrip = 278,
  kStripByteCounts = 279,
  kPlanarConfig = 284,
  kTileWidth = 322,
  kSampleFormat = 339,
};

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kUnreadableFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::kUnreadableFile, "read error on " + path.string());
  return bytes;
}

void write_atomically(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kUnreadableFile, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::kUnreadableFile, "write error on " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kUnreadableFile, "cannot rename into " + path.string() + ": " + ec.message());
}

class TiffReader {
 public:
  TiffReader(const std::vector<std::uint8_t>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  ScalarField decode() {
    if (bytes_.size() < 8) corrupt("file shorter than a TIFF header");
    if (bytes_[0] == 'I' && bytes_[1] == 'I') {
      big_ = false;
    } else if (bytes_[0] == 'M' && bytes_[1] == 'M') {
      big_ = true;
    } else {
      corrupt("missing TIFF byte-order mark");
    }
    const std::uint16_t magic = u16(2);
    if (magic == 43) unsupported("BigTIFF");
    if (magic != 42) corrupt("bad TIFF magic number");
    read_ifd(u32(4));

    const std::size_t cols = scalar(kImageWidth, 0);
    const std::size_t rows = scalar(kImageLength, 0);
    if (rows == 0 || cols == 0) corrupt("missing image dimensions");
    const std::size_t bits = scalar(kBitsPerSample, 1);
    const std::size_t spp = scalar(kSamplesPerPixel, 1);
    const std::size_t compression = scalar(kCompression, 1);
    const std::size_t format = scalar(kSampleFormat, 1);
    if (tags_.count(kTileWidth)) unsupported("tiled layout");
    if (compression != 1) unsupported("compression scheme " + std::to_string(compression));
    if (spp != 1) unsupported(std::to_string(spp) + " samples per pixel");
    if (bits != 8 && bits != 16 && bits != 32 && bits != 64) {
      unsupported(std::to_string(bits) + "-bit samples");
    }
    if (format == 3 && bits != 32 && bits != 64) unsupported(std::to_string(bits) + "-bit float");
    if (format != 1 && format != 2 && format != 3) unsupported("sample format " + std::to_string(format));

    const auto offsets = values(kStripOffsets);
    if (offsets.empty()) corrupt("missing strip offsets");
    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t needed = rows * cols * bytes_per_sample;
    std::vector<std::uint32_t> counts = values(kStripByteCounts);
    if (counts.empty()) {
      const std::size_t per_strip = scalar(kRowsPerStrip, rows) * cols * bytes_per_sample;
      counts.assign(offsets.size(), static_cast<std::uint32_t>(per_strip));
    }
    if (counts.size() != offsets.size()) corrupt("strip offset/count length mismatch");

    std::vector<std::uint8_t> pixels;
    pixels.reserve(needed);
    for (std::size_t s = 0; s < offsets.size() && pixels.size() < needed; ++s) {
      const std::size_t take = std::min<std::size_t>(counts[s], needed - pixels.size());
      if (static_cast<std::size_t>(offsets[s]) + take > bytes_.size()) corrupt("truncated strip data");
      pixels.insert(pixels.end(), bytes_.begin() + offsets[s], bytes_.begin() + offsets[s] + take);
    }
    if (pixels.size() < needed) corrupt("strips hold fewer bytes than the image needs");

    ScalarField out(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i) {
      out[i] = sample(pixels.data() + i * bytes_per_sample, bits, format);
    }
    return out;
  }

 private:
  [[noreturn]] void corrupt(const std::string& why) const {
    fail(ErrorCode::kUnreadableFile, name_ + ": " + why);
  }
  [[noreturn]] void unsupported(const std::string& why) const {
    fail(ErrorCode::kUnsupportedFormat, name_ + ": unsupported " + why);
  }

  std::uint64_t load(const std::uint8_t* p, std::size_t n) const {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t shift = big_ ? (n - 1 - i) * 8 : i * 8;
      v |= static_cast<std::uint64_t>(p[i]) << shift;
    }
    return v;
  }
  std::uint16_t u16(std::size_t off) const {
    if (off + 2 > bytes_.size()) corrupt("offset past end of file");
    return static_cast<std::uint16_t>(load(bytes_.data() + off, 2));
  }
  std::uint32_t u32(std::size_t off) const {
    if (off + 4 > bytes_.size()) corrupt("offset past end of file");
    return static_cast<std::uint32_t>(load(bytes_.data() + off, 4));
  }

  void read_ifd(std::size_t off) {
    const std::uint16_t entries = u16(off);
    if (off + 2 + 12u * entries > bytes_.size()) corrupt("truncated directory");
    for (std::uint16_t e = 0; e < entries; ++e) {
      const std::size_t at = off + 2 + 12u * e;
      const std::uint16_t tag = u16(at);
      const std::uint16_t type = u16(at + 2);
      const std::uint32_t count = u32(at + 4);
      std::size_t width = 0;
      if (type == 1) width = 1;        // BYTE
      else if (type == 3) width = 2;   // SHORT
      else if (type == 4) width = 4;   // LONG
      else continue;
      const std::size_t total = width * count;
      const std::size_t data = total <= 4 ? at + 8 : u32(at + 8);
      if (data + total > bytes_.size()) corrupt("tag data past end of file");
      std::vector<std::uint32_t> vals(count);
      for (std::uint32_t i = 0; i < count; ++i) {
        vals[i] = static_cast<std::uint32_t>(load(bytes_.data() + data + i * width, width));
      }
      tags_[tag] = std::move(vals);
    }
  }

  std::vector<std::uint32_t> values(std::uint16_t tag) const {
    auto it = tags_.find(tag);
    return it == tags_.end() ? std::vector<std::uint32_t>{} : it->second;
  }
  std::size_t scalar(std::uint16_t tag, std::size_t fallback) const {
    auto it = tags_.find(tag);
    if (it == tags_.end() || it->second.empty()) return fallback;
    return it->second.front();
  }

  double sample(const std::uint8_t* p, std::size_t bits, std::size_t format) const {
    const std::uint64_t raw = load(p, bits / 8);
    if (format == 3) {
      if (bits == 32) return std::bit_cast<float>(static_cast<std::uint32_t>(raw));
      return std::bit_cast<double>(raw);
    }
    if (format == 2) {
      switch (bits) {
        case 8: return static_cast<std::int8_t>(raw);
        case 16: return static_cast<std::int16_t>(raw);
        case 32: return static_cast<std::int32_t>(raw);
        default: return static_cast<double>(static_cast<std::int64_t>(raw));
      }
    }
    return static_cast<double>(raw);
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string name_;
  bool big_ = false;
  std::map<std::uint16_t, std::vector<std::uint32_t>> tags_;
};

bool is_raw(const fs::path& path) {
  const std::string ext = path.extension().string();
  return ext == ".raw" || ext == ".bin";
}

void put(std::vector<std::uint8_t>& out, std::uint64_t v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_samples(std::vector<std::uint8_t>& out, const ScalarField& field, SampleType type) {
  for (double v : field.values()) {
    if (type == SampleType::kFloat32) {
      put(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
    } else {
      put(out, std::bit_cast<std::uint64_t>(v), 8);
    }
  }
}

}  // namespace

ScalarField load_image(const fs::path& path, const std::optional<RawLayout>& raw) {
  if (!fs::exists(path)) fail(ErrorCode::kUnreadableFile, "no such file: " + path.string());
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  if (is_raw(path)) {
    if (!raw) fail(ErrorCode::kConfig, path.string() + ": raw image needs rows/cols");
    const std::size_t width = raw->type == SampleType::kFloat32 ? 4 : 8;
    if (bytes.size() != raw->rows * raw->cols * width) {
      fail(ErrorCode::kShapeMismatch, path.string() + ": " + std::to_string(bytes.size()) +
                                          " bytes do not match " + std::to_string(raw->rows) + "x" +
                                          std::to_string(raw->cols));
    }
    ScalarField out(raw->rows, raw->cols);
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::uint64_t v = 0;
      for (std::size_t b = 0; b < width; ++b) v |= static_cast<std::uint64_t>(bytes[i * width + b]) << (8 * b);
      out[i] = width == 4 ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(v)))
                          : std::bit_cast<double>(v);
    }
    return out;
  }
  return TiffReader(bytes, path.string()).decode();
}

void save_image(const fs::path& path, const ScalarField& field, SampleType type) {
  if (field.empty()) fail(ErrorCode::kDimension, "refusing to save an empty field");
  std::vector<std::uint8_t> out;
  if (is_raw(path)) {
    put_samples(out, field, type);
    write_atomically(path, out);
    return;
  }
  const std::uint32_t bits = type == SampleType::kFloat32 ? 32 : 64;
  const std::uint64_t data_bytes = field.size() * (bits / 8);
  if (data_bytes > 0xFFFFFFF0ull) fail(ErrorCode::kUnsupportedFormat, "image too large for TIFF");

  struct Entry {
    std::uint16_t tag, type;
    std::uint32_t value;
  };
  constexpr std::uint32_t kData = 152;  // header + 11-entry IFD, 8-byte aligned
  const std::vector<Entry> entries = {
      {kImageWidth, 4, static_cast<std::uint32_t>(field.cols())},
      {kImageLength, 4, static_cast<std::uint32_t>(field.rows())},
      {kBitsPerSample, 3, bits},
      {kCompression, 3, 1},
      {kPhotometric, 3, 1},
      {kStripOffsets, 4, kData},
      {kSamplesPerPixel, 3, 1},
      {kRowsPerStrip, 4, static_cast<std::uint32_t>(field.rows())},
      {kStripByteCounts, 4, static_cast<std::uint32_t>(data_bytes)},
      {kPlanarConfig, 3, 1},
      {kSampleFormat, 3, 3},
  };
  out.reserve(kData + data_bytes);
  out.push_back('I');
  out.push_back('I');
  put(out, 42, 2);
  put(out, 8, 4);
  put(out, entries.size(), 2);
  for (const Entry& e : entries) {
    put(out, e.tag, 2);
    put(out, e.type, 2);
    put(out, 1, 4);
    put(out, e.value, 4);  // SHORT values sit in the low bytes, little-endian
  }
  put(out, 0, 4);
  out.resize(kData, 0);
  put_samples(out, field, type);
  write_atomically(path, out);
}

void save_rgb_ppm(const fs::path& path, std::size_t rows, std::size_t cols,
                  const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != rows * cols * 3) fail(ErrorCode::kShapeMismatch, "RGB buffer size mismatch");
  const std::string header = "P6\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), rgb.begin(), rgb.end());
  write_atomically(path, out);
}

}  // namespace mobi

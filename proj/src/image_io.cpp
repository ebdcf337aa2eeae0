#include "mfstereo/image_io.hpp"

#include <png.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <algorithm>
#include <cctype>
#include <string>

namespace mfstereo {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw InputError(path.string() + ": " + what);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open file for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(path, "write failed");
}

/// Whitespace-separated header tokens of a netpbm-style file, with `#`
/// comments. Leaves `pos` on the single whitespace byte after the last token.
class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  std::string token() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() &&
           !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) fail(path_, "truncated header");
    return bytes_.substr(start, pos_ - start);
  }

  int integer() {
    const std::string t = token();
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      fail(path_, "bad header value '" + t + "'");
    }
    return v;
  }

  double real() {
    const std::string t = token();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) fail(path_, "bad header value '" + t + "'");
    return v;
  }

  /// Offset of the payload: one whitespace byte follows the last token.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size()) fail(path_, "missing payload");
    return pos_ + 1;
  }

 private:
  const std::string& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

RgbImage decode_ppm(const std::string& bytes, const std::filesystem::path& path) {
  HeaderReader header(bytes, path);
  if (header.token() != "P6") fail(path, "expected binary PPM (P6)");
  const int width = header.integer();
  const int height = header.integer();
  const int maxval = header.integer();
  if (width < 1 || height < 1) fail(path, "bad image dimensions");
  if (maxval != 255) fail(path, "unsupported bit depth (maxval " + std::to_string(maxval) + ")");
  const std::size_t offset = header.payload_offset();
  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() < offset + need) fail(path, "truncated pixel data");
  std::vector<std::uint8_t> data(bytes.begin() + offset, bytes.begin() + offset + need);
  return RgbImage(width, height, std::move(data));
}

struct PngReadSource {
  const std::string* bytes;
  std::size_t pos;
};

void png_read_from_string(png_structp png, png_bytep out, png_size_t len) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->pos + len > src->bytes->size()) {
    png_error(png, "unexpected end of stream");
  }
  std::memcpy(out, src->bytes->data() + src->pos, len);
  src->pos += len;
}

void png_error_to_exception(png_structp png, png_const_charp msg) {
  // libpng expects no return from here; longjmp back into the decoder frame.
  auto* message = static_cast<std::string*>(png_get_error_ptr(png));
  if (message) *message = msg;
  png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

RgbImage decode_png(const std::string& bytes, const std::filesystem::path& path) {
  std::string message = "corrupt PNG stream";
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message,
                                           png_error_to_exception,
                                           png_warning_ignore);
  if (!png) fail(path, "cannot allocate PNG decoder");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "cannot allocate PNG decoder");
  }

  PngReadSource source{&bytes, 0};
  std::vector<std::uint8_t> data;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, message);
  }
  png_set_read_fn(png, &source, png_read_from_string);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported bit depth 16");
  }
  {
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
      png_set_expand_gray_1_2_4_to_8(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY ||
        color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    data.resize(static_cast<std::size_t>(width) * height * 3);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
      rows[y] = data.data() + static_cast<std::size_t>(y) * width * 3;
    }
    png_read_image(png, rows.data());
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return RgbImage(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

void encode_png(const std::uint8_t* data, int width, int height, int channels,
                const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(
      std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!file) fail(path, "cannot open file for writing");

  std::string message = "PNG encoding failed";
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message,
                                            png_error_to_exception,
                                            png_warning_ignore);
  if (!png) fail(path, "cannot allocate PNG encoder");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "cannot allocate PNG encoder");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(
                           data + static_cast<std::size_t>(y) * width * channels));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

bool host_is_little_endian() { return std::endian::native == std::endian::little; }

std::uint32_t byteswap32(std::uint32_t v) {
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) |
         (v >> 24);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  static constexpr unsigned char kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    return decode_ppm(bytes, path);
  }
  fail(path, "not a PNG or binary PPM file");
}

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  std::string bytes = "P6\n" + std::to_string(image.width()) + " " +
                      std::to_string(image.height()) + "\n255\n";
  bytes.append(reinterpret_cast<const char*>(image.data().data()), image.data().size());
  write_file(path, bytes);
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  encode_png(image.data().data(), image.width(), image.height(), 3, path);
}

void write_png(const Grid<std::uint8_t, 1>& image, const std::filesystem::path& path) {
  encode_png(image.data().data(), image.width(), image.height(), 1, path);
}

GrayImage to_gray(const RgbImage& image) {
  GrayImage gray(image.width(), image.height());
  const auto& src = image.data();
  auto& dst = gray.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299f * src[3 * i] + 0.587f * src[3 * i + 1] + 0.114f * src[3 * i + 2];
  }
  return gray;
}

DisparityMap read_pfm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  HeaderReader header(bytes, path);
  const std::string magic = header.token();
  if (magic == "PF") fail(path, "expected grayscale PFM, got color PFM");
  if (magic != "Pf") fail(path, "bad PFM magic '" + magic + "'");
  const int width = header.integer();
  const int height = header.integer();
  const double scale = header.real();
  if (width < 1 || height < 1) fail(path, "bad PFM dimensions");
  if (scale == 0.0 || !std::isfinite(scale)) fail(path, "bad PFM scale");
  const std::size_t offset = header.payload_offset();
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - std::min(bytes.size(), offset) != count * 4) {
    fail(path, "payload size does not match " + std::to_string(width) + "x" +
                   std::to_string(height));
  }

  const bool swap = (scale < 0.0) != host_is_little_endian();
  DisparityMap map(width, height);
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, bytes.data() + offset + (static_cast<std::size_t>(row) * width + x) * 4, 4);
      if (swap) bits = byteswap32(bits);
      const float v = std::bit_cast<float>(bits);
      if (std::isnan(v)) {
        fail(path, "NaN disparity at (" + std::to_string(x) + "," + std::to_string(y) + ")");
      }
      map.at(x, y) = v;
    }
  }
  return map;
}

void write_pfm(const DisparityMap& map, const std::filesystem::path& path, float scale) {
  if (scale == 0.0f || !std::isfinite(scale)) fail(path, "bad PFM scale");
  char scale_text[64];
  std::snprintf(scale_text, sizeof scale_text, "%.6f", static_cast<double>(scale));
  std::string bytes = "Pf\n" + std::to_string(map.width()) + " " +
                      std::to_string(map.height()) + "\n" + scale_text + "\n";
  const std::size_t offset = bytes.size();
  bytes.resize(offset + map.pixel_count() * 4);
  const bool swap = (scale < 0.0f) != host_is_little_endian();
  for (int row = 0; row < map.height(); ++row) {
    const int y = map.height() - 1 - row;
    for (int x = 0; x < map.width(); ++x) {
      const float v = map.at(x, y);
      if (std::isnan(v)) fail(path, "refusing to write NaN disparity");
      std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      if (swap) bits = byteswap32(bits);
      std::memcpy(bytes.data() + offset + (static_cast<std::size_t>(row) * map.width() + x) * 4,
                  &bits, 4);
    }
  }
  write_file(path, bytes);
}

ValidityMask read_mask(const std::filesystem::path& path) {
  const RgbImage img = read_image(path);
  ValidityMask mask(img.width(), img.height());
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    mask.data()[i] = img.data()[3 * i] == 255 ? 1 : 0;
  }
  return mask;
}

CalibInfo parse_calib(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open calibration file");
  CalibInfo info;
  bool have_ndisp = false;
  std::string line;
  auto parse_int = [&](const std::string& key, const std::string& value) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      fail(path, "bad value for " + key + ": '" + value + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "ndisp") {
      info.ndisp = parse_int(key, value);
      have_ndisp = true;
    } else if (key == "width") {
      info.width = parse_int(key, value);
    } else if (key == "height") {
      info.height = parse_int(key, value);
    }
  }
  if (!have_ndisp) fail(path, "missing ndisp");
  if (info.ndisp < 2) fail(path, "ndisp must be at least 2");
  return info;
}

int effective_levels(int ndisp, int scale) {
  if (scale < 1) throw InputError("scale must be at least 1");
  return (ndisp + scale - 1) / scale;
}

RgbImage downsample(const RgbImage& image, int scale) {
  if (scale < 1) throw InputError("scale must be at least 1");
  if (scale == 1) return image;
  const int w = (image.width() + scale - 1) / scale;
  const int h = (image.height() + scale - 1) / scale;
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x1 = std::min(image.width(), (x + 1) * scale);
      const int y1 = std::min(image.height(), (y + 1) * scale);
      for (int c = 0; c < 3; ++c) {
        int sum = 0;
        int count = 0;
        for (int sy = y * scale; sy < y1; ++sy) {
          for (int sx = x * scale; sx < x1; ++sx) {
            sum += image.at(sx, sy, c);
            ++count;
          }
        }
        out.at(x, y, c) = static_cast<std::uint8_t>((sum + count / 2) / count);
      }
    }
  }
  return out;
}

}  // namespace mfstereo

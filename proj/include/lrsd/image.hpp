#ifndef LRSD_IMAGE_HPP
#define LRSD_IMAGE_HPP

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lrsd/linalg.hpp"

namespace lrsd {

/// One grayscale frame, values in [0,1].
struct Frame {
  Index height = 0;
  Index width = 0;
  Matrix pixels;  // height x width
  Index index = 0;
};

/// Binary foreground mask aligned to a frame's pixel grid.
struct Mask {
  Index height = 0;
  Index width = 0;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> bits;  // height x width

  Index foreground_count() const { return bits.count(); }
};

namespace detail {

struct PgmImage {
  Index width = 0;
  Index height = 0;
  int maxval = 0;
  std::vector<unsigned char> raster;  // row-major
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path + "'");
  }

  int get() {
    const int c = in_.get();
    if (c != EOF) ++offset_;
    return c;
  }

  std::size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

  void read_block(unsigned char* dst, std::size_t count) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count));
    const auto got = static_cast<std::size_t>(in_.gcount());
    offset_ += got;
    if (got != count) {
      throw FormatError("'" + path_ + "': truncated raster, expected " + std::to_string(count) +
                            " bytes",
                        offset_);
    }
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t offset_ = 0;
};

inline long parse_pgm_int(ByteReader& r, int first) {
  if (!std::isdigit(first)) {
    throw FormatError("'" + r.path() + "': expected digit in header", r.offset());
  }
  long value = first - '0';
  for (;;) {
    const int c = r.get();
    if (std::isdigit(c)) {
      value = value * 10 + (c - '0');
      if (value > 1'000'000'000L) {
        throw FormatError("'" + r.path() + "': header value out of range", r.offset());
      }
      continue;
    }
    if (c == EOF) throw FormatError("'" + r.path() + "': unexpected end of header", r.offset());
    if (!std::isspace(c)) {
      throw FormatError("'" + r.path() + "': malformed header token", r.offset());
    }
    return value;
  }
}

// Reads the next header token's first significant character.
inline int next_pgm_token_start(ByteReader& r) {
  for (;;) {
    int c = r.get();
    if (c == EOF) throw FormatError("'" + r.path() + "': unexpected end of header", r.offset());
    if (c == '#') {
      while (c != EOF && c != '\n') c = r.get();
      continue;
    }
    if (std::isspace(c)) continue;
    return c;
  }
}

inline PgmImage read_pgm(const std::string& path) {
  ByteReader r(path);
  if (r.get() != 'P' || r.get() != '5') {
    throw FormatError("'" + path + "': not a binary PGM (magic P5 missing)", 0);
  }
  PgmImage img;
  img.width = parse_pgm_int(r, next_pgm_token_start(r));
  img.height = parse_pgm_int(r, next_pgm_token_start(r));
  img.maxval = static_cast<int>(parse_pgm_int(r, next_pgm_token_start(r)));
  if (img.width < 1 || img.height < 1) {
    throw FormatError("'" + path + "': bad dimensions", r.offset());
  }
  if (img.maxval < 1 || img.maxval > 255) {
    throw FormatError("'" + path + "': unsupported maxval " + std::to_string(img.maxval),
                      r.offset());
  }
  // parse_pgm_int consumed exactly one whitespace after maxval; raster follows.
  img.raster.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  r.read_block(img.raster.data(), img.raster.size());
  return img;
}

inline void write_pgm(const std::string& path, Index height, Index width,
                      const std::vector<unsigned char>& raster) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

struct PngDeleter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngDeleter() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

inline Matrix read_png_gray(const std::string& path) {
  PngDeleter guard;
  guard.fp = std::fopen(path.c_str(), "rb");
  if (!guard.fp) throw IoError("cannot open '" + path + "'");

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, guard.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("'" + path + "': not a PNG file", 0);
  }
  guard.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!guard.png) throw IoError("libpng initialization failed");
  guard.info = png_create_info_struct(guard.png);
  if (!guard.info) throw IoError("libpng initialization failed");
  if (setjmp(png_jmpbuf(guard.png))) {
    throw FormatError("'" + path + "': corrupt PNG stream", 8);
  }
  png_init_io(guard.png, guard.fp);
  png_set_sig_bytes(guard.png, 8);
  png_read_info(guard.png, guard.info);

  png_set_strip_16(guard.png);
  png_set_strip_alpha(guard.png);
  png_set_expand(guard.png);  // palette -> rgb, gray<8 -> 8
  png_read_update_info(guard.png, guard.info);

  const png_uint_32 width = png_get_image_width(guard.png, guard.info);
  const png_uint_32 height = png_get_image_height(guard.png, guard.info);
  const int channels = png_get_channels(guard.png, guard.info);
  if (channels != 1 && channels != 3) {
    throw FormatError("'" + path + "': unsupported channel count " + std::to_string(channels), 8);
  }

  std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels);
  Matrix out(static_cast<Index>(height), static_cast<Index>(width));
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(guard.png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x) {
      double v;
      if (channels == 1) {
        v = row[x];
      } else {
        const std::size_t base = static_cast<std::size_t>(x) * 3;
        v = (static_cast<double>(row[base]) + row[base + 1] + row[base + 2]) / 3.0;
      }
      out(static_cast<Index>(y), static_cast<Index>(x)) = v / 255.0;
    }
  }
  return out;
}

// Glob-style match supporting '*' and '?'.
inline bool glob_match(const std::string& pattern, const std::string& name) {
  std::size_t p = 0, n = 0, star = std::string::npos, mark = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

inline bool has_image_extension(const std::string& name) {
  const auto dot = name.find_last_of('.');
  if (dot == std::string::npos) return false;
  std::string ext = name.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == "pgm" || ext == "png";
}

}  // namespace detail

/// Decode one PGM or PNG image to a [0,1] grayscale matrix.
inline Matrix load_image(const std::string& path) {
  const auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == "png") return detail::read_png_gray(path);
  if (ext == "pgm") {
    const auto img = detail::read_pgm(path);
    Matrix out(img.height, img.width);
    for (Index r = 0; r < img.height; ++r)
      for (Index c = 0; c < img.width; ++c)
        out(r, c) =
            static_cast<double>(img.raster[static_cast<std::size_t>(r * img.width + c)]) /
            static_cast<double>(img.maxval);
    return out;
  }
  throw InputError("load_image: unsupported extension on '" + path + "'");
}

/// Load every matching image under path in lexicographic filename order.
inline std::vector<Frame> load_frames(const std::string& path, const std::string& pattern = "*") {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) throw IoError("'" + path + "' is not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (detail::glob_match(pattern, name) && detail::has_image_extension(name)) {
      names.push_back(name);
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) {
    throw InputError("load_frames: no frames matching '" + pattern + "' under '" + path + "'");
  }

  std::vector<Frame> frames;
  frames.reserve(names.size());
  for (const auto& name : names) {
    Frame f;
    f.pixels = load_image((fs::path(path) / name).string());
    f.height = f.pixels.rows();
    f.width = f.pixels.cols();
    f.index = static_cast<Index>(frames.size());
    if (!frames.empty() &&
        (f.height != frames.front().height || f.width != frames.front().width)) {
      throw InputError("load_frames: '" + name + "' is " + std::to_string(f.height) + "x" +
                       std::to_string(f.width) + " but earlier frames are " +
                       std::to_string(frames.front().height) + "x" +
                       std::to_string(frames.front().width));
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

/// Threshold the sparse column into a foreground mask, row-major reshape.
inline Mask foreground_mask(const Vector& s_column, Index height, Index width, double theta) {
  if (theta <= 0.0 || theta > 1.0) {
    throw ArgumentError("foreground_mask: theta must lie in (0, 1]");
  }
  if (s_column.size() != height * width) {
    throw InputError("foreground_mask: column length " + std::to_string(s_column.size()) +
                     " does not match " + std::to_string(height) + "x" + std::to_string(width));
  }
  Mask mask;
  mask.height = height;
  mask.width = width;
  mask.bits.resize(height, width);
  for (Index r = 0; r < height; ++r)
    for (Index c = 0; c < width; ++c) mask.bits(r, c) = std::abs(s_column(r * width + c)) >= theta;
  return mask;
}

/// Binary PGM, foreground = 255, background = 0.
inline void write_mask(const Mask& mask, const std::string& path) {
  std::vector<unsigned char> raster(
      static_cast<std::size_t>(mask.height) * static_cast<std::size_t>(mask.width));
  for (Index r = 0; r < mask.height; ++r)
    for (Index c = 0; c < mask.width; ++c)
      raster[static_cast<std::size_t>(r * mask.width + c)] = mask.bits(r, c) ? 255 : 0;
  detail::write_pgm(path, mask.height, mask.width, raster);
}

/// Inverse of write_mask; any value >= 128 reads as foreground.
inline Mask read_mask(const std::string& path) {
  const auto img = detail::read_pgm(path);
  Mask mask;
  mask.height = img.height;
  mask.width = img.width;
  mask.bits.resize(img.height, img.width);
  for (Index r = 0; r < img.height; ++r)
    for (Index c = 0; c < img.width; ++c)
      mask.bits(r, c) = img.raster[static_cast<std::size_t>(r * img.width + c)] >= 128;
  return mask;
}

}  // namespace lrsd

#endif  // LRSD_IMAGE_HPP

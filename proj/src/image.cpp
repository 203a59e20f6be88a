#include "coverbench/image.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "coverbench/hash.hpp"

namespace coverbench {

void Image::fill(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  for (std::size_t i = 0; i + 2 < pixels.size(); i += 3) {
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }
}

void Image::fill_rect(int x, int y, int w, int h, std::uint8_t r,
                      std::uint8_t g, std::uint8_t b) {
  int x0 = std::max(0, x);
  int y0 = std::max(0, y);
  int x1 = std::min(width, x + w);
  int y1 = std::min(height, y + h);
  for (int yy = y0; yy < y1; ++yy) {
    for (int xx = x0; xx < x1; ++xx) {
      std::uint8_t* p = at(xx, yy);
      p[0] = r;
      p[1] = g;
      p[2] = b;
    }
  }
}

bool Image::uniform() const {
  if (pixels.size() < 3) return true;
  for (std::size_t i = 3; i + 2 < pixels.size(); i += 3) {
    if (pixels[i] != pixels[0] || pixels[i + 1] != pixels[1] ||
        pixels[i + 2] != pixels[2]) {
      return false;
    }
  }
  return true;
}

namespace {

struct Cursor {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;

  bool eof() const { return pos >= data.size(); }
  char peek() const { return static_cast<char>(data[pos]); }
  char take() { return static_cast<char>(data[pos++]); }
};

// Skips PPM whitespace/comments; captures the first comment line seen.
void skip_separators(Cursor& c, std::string* comment) {
  while (!c.eof()) {
    char ch = c.peek();
    if (ch == '#') {
      c.take();
      if (!c.eof() && c.peek() == ' ') c.take();
      std::string line;
      while (!c.eof() && c.peek() != '\n') line.push_back(c.take());
      if (comment && comment->empty()) *comment = line;
    } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
      c.take();
    } else {
      break;
    }
  }
}

int read_int(Cursor& c, std::string* comment) {
  skip_separators(c, comment);
  if (c.eof() || c.peek() < '0' || c.peek() > '9') {
    throw std::runtime_error("ppm: expected integer in header");
  }
  long v = 0;
  while (!c.eof() && c.peek() >= '0' && c.peek() <= '9') {
    v = v * 10 + (c.take() - '0');
    if (v > 1 << 24) throw std::runtime_error("ppm: header value too large");
  }
  return static_cast<int>(v);
}

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw std::runtime_error("ppm: not a P6 file");
  }
  Cursor c{bytes, 2};
  Image img;
  img.width = read_int(c, &img.comment);
  img.height = read_int(c, &img.comment);
  int maxval = read_int(c, &img.comment);
  if (maxval != 255) throw std::runtime_error("ppm: only maxval 255 supported");
  if (c.eof()) throw std::runtime_error("ppm: truncated header");
  c.take();  // single separator before raster
  std::size_t need = static_cast<std::size_t>(img.width) * img.height * 3;
  if (img.width <= 0 || img.height <= 0 || bytes.size() - c.pos < need) {
    throw std::runtime_error("ppm: truncated pixel data");
  }
  img.pixels.assign(bytes.begin() + static_cast<long>(c.pos),
                    bytes.begin() + static_cast<long>(c.pos + need));
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  if (img.pixels.size() !=
      static_cast<std::size_t>(img.width) * img.height * 3) {
    throw std::runtime_error("ppm: pixel buffer does not match dimensions");
  }
  std::string header = "P6\n";
  if (!img.comment.empty()) header += "# " + img.comment + "\n";
  header += std::to_string(img.width) + " " + std::to_string(img.height) +
            "\n255\n";
  std::vector<std::uint8_t> out;
  out.reserve(header.size() + img.pixels.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

Image load_ppm(const std::filesystem::path& path) {
  try {
    return decode_ppm(read_file_bytes(path));
  } catch (const std::exception& e) {
    throw std::runtime_error("decoding " + path.string() + ": " + e.what());
  }
}

void save_ppm(const Image& img, const std::filesystem::path& path) {
  auto bytes = encode_ppm(img);
  write_file_bytes(path, bytes);
}

}  // namespace coverbench

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace coverbench {

// Interleaved 8-bit RGB raster. On-disk form is binary PPM (P6); the one
// comment line survives round trips so content tags embedded by the
// synthetic corpus generator stay attached to derived images.
struct Image {
  int width = 0;
  int height = 0;
  std::string comment;               // without the leading "# "
  std::vector<std::uint8_t> pixels;  // 3 * width * height, row-major RGB

  std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (y * width + x); }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + 3 * (y * width + x);
  }

  void fill(std::uint8_t r, std::uint8_t g, std::uint8_t b);

  // Paints an axis-aligned rectangle; x/y/w/h are clipped to the raster.
  void fill_rect(int x, int y, int w, int h, std::uint8_t r, std::uint8_t g,
                 std::uint8_t b);

  bool uniform() const;  // every pixel identical
};

Image decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Image& img);

Image load_ppm(const std::filesystem::path& path);
void save_ppm(const Image& img, const std::filesystem::path& path);

}  // namespace coverbench

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace autochar {

// Decoded PNG: samples interleaved row-major, `channels` per pixel.
struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 (gray) or 3 (RGB)
  int bit_depth = 8; // 8 or 16
  std::vector<std::uint16_t> samples;
};

// Gray, gray+alpha, RGB, RGBA and palette inputs are expanded to gray or RGB;
// alpha is dropped. Throws IoError / FormatError.
PngImage read_png(const std::filesystem::path &file);
void write_png(const PngImage &image, const std::filesystem::path &file);

} // namespace autochar

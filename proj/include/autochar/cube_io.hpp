#pragma once

#include "autochar/grid.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace autochar {

// X x Y grid of reflectance spectra, stored band-sequential:
// values[band * width * height + y * width + x].
class HyperCube {
public:
  HyperCube() = default;
  // Throws DomainError if any invariant is violated.
  HyperCube(int width, int height, std::vector<double> wavelengths_nm,
            std::vector<float> values);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t bands() const { return wavelengths_.size(); }
  std::size_t pixels() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::span<const double> wavelengths() const { return wavelengths_; }
  std::span<const float> values() const { return values_; }
  std::span<const float> band(std::size_t b) const {
    return std::span<const float>(values_).subspan(b * pixels(), pixels());
  }
  float at(int x, int y, std::size_t b) const {
    return values_[b * pixels() + static_cast<std::size_t>(y) * width_ + x];
  }
  std::vector<float> spectrum(int x, int y) const;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> wavelengths_;
  std::vector<float> values_;
};

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

// 8-bit RGB image captured at `timestamp_s` seconds after sequence start.
// Channel accessors return counts / 255.
class RgbFrame {
public:
  RgbFrame() = default;
  RgbFrame(int width, int height, double timestamp_s,
           std::vector<std::uint8_t> interleaved_rgb);

  int width() const { return width_; }
  int height() const { return height_; }
  double timestamp_s() const { return timestamp_s_; }
  Rgb pixel(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width_ + x);
    return {rgb_[i] / 255.0, rgb_[i + 1] / 255.0, rgb_[i + 2] / 255.0};
  }
  std::span<const std::uint8_t> raw() const { return rgb_; }

private:
  int width_ = 0;
  int height_ = 0;
  double timestamp_s_ = 0.0;
  std::vector<std::uint8_t> rgb_;
};

class FrameSequence {
public:
  FrameSequence() = default;
  // Frames must share dimensions and have strictly ascending timestamps.
  explicit FrameSequence(std::vector<RgbFrame> frames);

  const std::vector<RgbFrame> &frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  // T: last timestamp in hours.
  double duration_hours() const;

private:
  std::vector<RgbFrame> frames_;
};

// HCUBE v1: <stem>.json {width, height, wavelengths[]} + <stem>.f32 payload of
// little-endian float32, band-sequential. `path` may name either file or the
// bare stem.
HyperCube load_cube(const std::filesystem::path &path);
void save_cube(const HyperCube &cube, const std::filesystem::path &path);

// Loads every frame_<seconds>.png in `dir`, sorted by timestamp.
FrameSequence load_frames(const std::filesystem::path &dir);
void save_frames(const FrameSequence &frames, const std::filesystem::path &dir);

RgbFrame load_frame_png(const std::filesystem::path &file, double timestamp_s);
void save_frame_png(const RgbFrame &frame, const std::filesystem::path &file);

// Intensity in [0, 255]. Cubes: per-pixel mean over bands, min-max rescaled
// (a constant field maps to 0). Frames: 255 * luma (0.299 r + 0.587 g + 0.114 b).
IntensityGrid grayscale(const HyperCube &cube);
IntensityGrid grayscale(const RgbFrame &frame);

} // namespace autochar

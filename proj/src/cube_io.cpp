#include "autochar/cube_io.hpp"

#include "autochar/csv.hpp"
#include "autochar/error.hpp"
#include "autochar/png_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <regex>

namespace fs = std::filesystem;

namespace autochar {
namespace {

struct CubePaths {
  fs::path header;
  fs::path payload;
};

CubePaths cube_paths(const fs::path &path) {
  fs::path stem = path;
  const auto ext = path.extension();
  if (ext == ".json" || ext == ".f32")
    stem.replace_extension();
  return {fs::path(stem.string() + ".json"), fs::path(stem.string() + ".f32")};
}

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) |
         (v << 24);
}

void check_wavelengths(const std::vector<double> &wl) {
  if (wl.size() < 2)
    throw DomainError("cube: need at least 2 wavelengths");
  for (std::size_t i = 0; i < wl.size(); ++i) {
    if (!std::isfinite(wl[i]))
      throw DomainError("cube: non-finite wavelength");
    if (i > 0 && !(wl[i] > wl[i - 1]))
      throw DomainError("cube: wavelengths must be strictly ascending");
  }
}

} // namespace

HyperCube::HyperCube(int width, int height, std::vector<double> wavelengths_nm,
                     std::vector<float> values)
    : width_(width), height_(height), wavelengths_(std::move(wavelengths_nm)),
      values_(std::move(values)) {
  if (width_ <= 0 || height_ <= 0)
    throw DomainError("cube: width and height must be positive");
  check_wavelengths(wavelengths_);
  if (values_.size() != pixels() * bands())
    throw DomainError("cube: value count " + std::to_string(values_.size()) +
                      " != width*height*bands " +
                      std::to_string(pixels() * bands()));
  for (float v : values_)
    if (!std::isfinite(v))
      throw DomainError("cube: non-finite reflectance value");
}

std::vector<float> HyperCube::spectrum(int x, int y) const {
  std::vector<float> s(bands());
  const std::size_t p = static_cast<std::size_t>(y) * width_ + x;
  for (std::size_t b = 0; b < bands(); ++b)
    s[b] = values_[b * pixels() + p];
  return s;
}

HyperCube load_cube(const fs::path &path) {
  const auto paths = cube_paths(path);
  if (!fs::exists(paths.header))
    throw IoError("cube header not found: " + paths.header.string());
  if (!fs::exists(paths.payload))
    throw IoError("cube payload not found: " + paths.payload.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_text_file(paths.header));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError("cube header " + paths.header.string() + ": " + e.what());
  }
  int width = 0, height = 0;
  std::vector<double> wavelengths;
  try {
    width = header.at("width").get<int>();
    height = header.at("height").get<int>();
    wavelengths = header.at("wavelengths").get<std::vector<double>>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError("cube header " + paths.header.string() + ": " + e.what());
  }
  if (width <= 0 || height <= 0)
    throw FormatError("cube header: width and height must be positive");
  check_wavelengths(wavelengths);

  const std::size_t count = static_cast<std::size_t>(width) * height *
                            wavelengths.size();
  const auto bytes = fs::file_size(paths.payload);
  if (bytes != count * sizeof(float))
    throw FormatError("cube payload size mismatch: " + paths.payload.string() +
                      " has " + std::to_string(bytes) + " bytes, header implies " +
                      std::to_string(count * sizeof(float)));

  std::vector<float> values(count);
  std::ifstream in(paths.payload, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + paths.payload.string());
  in.read(reinterpret_cast<char *>(values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in)
    throw IoError("short read on " + paths.payload.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto &v : values)
      v = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(v)));
  }
  for (float v : values)
    if (!std::isfinite(v))
      throw FormatError("cube payload contains non-finite values: " +
                        paths.payload.string());
  return HyperCube(width, height, std::move(wavelengths), std::move(values));
}

void save_cube(const HyperCube &cube, const fs::path &path) {
  const auto paths = cube_paths(path);
  nlohmann::json header;
  header["width"] = cube.width();
  header["height"] = cube.height();
  header["wavelengths"] =
      std::vector<double>(cube.wavelengths().begin(), cube.wavelengths().end());
  write_text_file(paths.header, header.dump(2) + "\n");

  std::ofstream out(paths.payload, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + paths.payload.string());
  const auto values = cube.values();
  if constexpr (std::endian::native == std::endian::big) {
    std::vector<std::uint32_t> swapped(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      swapped[i] = byteswap32(std::bit_cast<std::uint32_t>(values[i]));
    out.write(reinterpret_cast<const char *>(swapped.data()),
              static_cast<std::streamsize>(swapped.size() * 4));
  } else {
    out.write(reinterpret_cast<const char *>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  }
  out.flush();
  if (!out)
    throw IoError("write failed: " + paths.payload.string());
}

RgbFrame::RgbFrame(int width, int height, double timestamp_s,
                   std::vector<std::uint8_t> interleaved_rgb)
    : width_(width), height_(height), timestamp_s_(timestamp_s),
      rgb_(std::move(interleaved_rgb)) {
  if (width_ <= 0 || height_ <= 0)
    throw DomainError("frame: width and height must be positive");
  if (!(timestamp_s_ >= 0.0) || !std::isfinite(timestamp_s_))
    throw DomainError("frame: timestamp must be finite and >= 0");
  if (rgb_.size() != 3 * static_cast<std::size_t>(width_) * height_)
    throw DomainError("frame: pixel buffer size mismatch");
}

FrameSequence::FrameSequence(std::vector<RgbFrame> frames)
    : frames_(std::move(frames)) {
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    if (frames_[i].width() != frames_[0].width() ||
        frames_[i].height() != frames_[0].height())
      throw DomainError("frames: dimension mismatch at frame " +
                        std::to_string(i));
    if (!(frames_[i].timestamp_s() > frames_[i - 1].timestamp_s()))
      throw DomainError("frames: timestamps must be strictly ascending");
  }
}

double FrameSequence::duration_hours() const {
  return frames_.empty() ? 0.0 : frames_.back().timestamp_s() / 3600.0;
}

RgbFrame load_frame_png(const fs::path &file, double timestamp_s) {
  PngImage img = read_png(file);
  if (img.bit_depth != 8)
    throw FormatError("frame must be 8-bit: " + file.string());
  std::vector<std::uint8_t> rgb(3 * static_cast<std::size_t>(img.width) *
                                img.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) {
      const auto v = img.channels == 3 ? img.samples[3 * p + c] : img.samples[p];
      rgb[3 * p + c] = static_cast<std::uint8_t>(v);
    }
  }
  return RgbFrame(img.width, img.height, timestamp_s, std::move(rgb));
}

void save_frame_png(const RgbFrame &frame, const fs::path &file) {
  PngImage img;
  img.width = frame.width();
  img.height = frame.height();
  img.channels = 3;
  img.bit_depth = 8;
  img.samples.assign(frame.raw().begin(), frame.raw().end());
  write_png(img, file);
}

FrameSequence load_frames(const fs::path &dir) {
  if (!fs::is_directory(dir))
    throw IoError("frame directory not found: " + dir.string());
  static const std::regex kName(R"(frame_(\d+)\.png)");
  std::vector<std::pair<long long, fs::path>> entries;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file())
      continue;
    const auto name = entry.path().filename().string();
    if (entry.path().extension() != ".png")
      continue;
    std::smatch m;
    if (!std::regex_match(name, m, kName))
      throw FormatError("unparseable frame filename: " + name +
                        " (expected frame_<seconds>.png)");
    entries.emplace_back(parse_int(m[1].str(), name), entry.path());
  }
  if (entries.empty())
    throw IoError("no frame_<seconds>.png files in " + dir.string());
  std::sort(entries.begin(), entries.end());
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].first == entries[i - 1].first)
      throw FormatError("duplicate frame timestamp " +
                        std::to_string(entries[i].first) + " s in " +
                        dir.string());

  std::vector<RgbFrame> frames;
  frames.reserve(entries.size());
  for (const auto &[seconds, file] : entries) {
    frames.push_back(load_frame_png(file, static_cast<double>(seconds)));
    if (frames.back().width() != frames.front().width() ||
        frames.back().height() != frames.front().height())
      throw FormatError("frame dimension mismatch: " + file.filename().string());
  }
  return FrameSequence(std::move(frames));
}

void save_frames(const FrameSequence &frames, const fs::path &dir) {
  fs::create_directories(dir);
  for (const auto &f : frames.frames()) {
    const double t = f.timestamp_s();
    if (t != std::floor(t))
      throw DomainError("frame timestamps must be whole seconds to be saved");
    save_frame_png(f, dir / ("frame_" + std::to_string(static_cast<long long>(t)) +
                             ".png"));
  }
}

IntensityGrid grayscale(const HyperCube &cube) {
  IntensityGrid out(cube.width(), cube.height());
  const std::size_t n = cube.pixels();
  std::vector<double> sum(n, 0.0);
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const auto band = cube.band(b);
    for (std::size_t p = 0; p < n; ++p)
      sum[p] += band[p];
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t p = 0; p < n; ++p) {
    sum[p] /= static_cast<double>(cube.bands());
    lo = std::min(lo, sum[p]);
    hi = std::max(hi, sum[p]);
  }
  if (!(hi > lo))
    return out; // constant field -> all zeros
  const double scale = 255.0 / (hi - lo);
  for (std::size_t p = 0; p < n; ++p)
    out.data[p] = std::clamp((sum[p] - lo) * scale, 0.0, 255.0);
  return out;
}

IntensityGrid grayscale(const RgbFrame &frame) {
  IntensityGrid out(frame.width(), frame.height());
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x) {
      const Rgb c = frame.pixel(x, y);
      out.at(x, y) =
          std::clamp(255.0 * (0.299 * c.r + 0.587 * c.g + 0.114 * c.b), 0.0,
                     255.0);
    }
  return out;
}

} // namespace autochar

#include "autochar/stability.hpp"

#include "autochar/csv.hpp"
#include "autochar/error.hpp"
#include "autochar/parallel.hpp"
#include "autochar/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace autochar {

void DegradationSeries::validate() const {
  if (times_h.size() != colors.size())
    throw DomainError("series for region " + std::to_string(region_id) +
                      ": one colour per frame required");
  for (std::size_t i = 1; i < times_h.size(); ++i)
    if (!(times_h[i] > times_h[i - 1]))
      throw DomainError("series for region " + std::to_string(region_id) +
                        ": times must be ascending");
}

std::vector<DegradationSeries> extract_series(const FrameSequence &frames,
                                              const LabelMap &labels,
                                              const TpsModel *model) {
  if (frames.size() == 0)
    throw DomainError("extract_series: no frames");
  const auto &f0 = frames.frames().front();
  if (labels.width != f0.width() || labels.height != f0.height())
    throw DomainError("label map is " + std::to_string(labels.width) + "x" +
                      std::to_string(labels.height) + " but frames are " +
                      std::to_string(f0.width()) + "x" + std::to_string(f0.height()));
  int max_label = 0;
  for (auto v : labels.data)
    max_label = std::max(max_label, static_cast<int>(v));
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t i = 0; i < labels.data.size(); ++i)
    if (labels.data[i] > 0)
      members[static_cast<std::size_t>(labels.data[i])].push_back(i);

  std::vector<DegradationSeries> out;
  for (int id = 1; id <= max_label; ++id) {
    if (members[static_cast<std::size_t>(id)].empty())
      continue;
    DegradationSeries s;
    s.region_id = id;
    s.pixel_count = members[static_cast<std::size_t>(id)].size();
    s.times_h.reserve(frames.size());
    s.colors.resize(frames.size());
    for (const auto &f : frames.frames())
      s.times_h.push_back(f.timestamp_s() / 3600.0);
    out.push_back(std::move(s));
  }

  parallel_for(frames.size(), [&](std::size_t fi) {
    const auto &frame = frames.frames()[fi];
    const auto raw = frame.raw();
    std::unordered_map<std::uint32_t, std::array<double, 3>> cache;
    auto channels = [&](std::size_t px) -> std::array<double, 3> {
      const std::uint8_t r = raw[3 * px], g = raw[3 * px + 1], b = raw[3 * px + 2];
      if (!model)
        return {r / 255.0, g / 255.0, b / 255.0};
      const std::uint32_t key = (std::uint32_t(r) << 16) | (std::uint32_t(g) << 8) | b;
      auto it = cache.find(key);
      if (it != cache.end())
        return it->second;
      const Xyz v = model->evaluate(Rgb{r / 255.0, g / 255.0, b / 255.0});
      std::array<double, 3> c{v.X / kD50White.X, v.Y / kD50White.Y, v.Z / kD50White.Z};
      cache.emplace(key, c);
      return c;
    };
    for (auto &s : out) {
      std::array<double, 3> sum{};
      for (std::size_t px : members[static_cast<std::size_t>(s.region_id)]) {
        const auto c = channels(px);
        for (int k = 0; k < 3; ++k)
          sum[k] += c[k];
      }
      for (int k = 0; k < 3; ++k)
        s.colors[fi][k] = sum[k] / static_cast<double>(s.pixel_count);
    }
  });
  return out;
}

double instability_index(const DegradationSeries &s, int channel) {
  s.validate();
  if (s.times_h.size() < 2)
    throw DomainError("instability index needs at least 2 frames (region " +
                      std::to_string(s.region_id) + ")");
  if (channel < 0 || channel > 2)
    throw DomainError("channel must be 0, 1 or 2");
  const auto k = static_cast<std::size_t>(channel);
  const double r0 = s.colors[0][k];
  double area = 0.0;
  for (std::size_t i = 1; i < s.times_h.size(); ++i) {
    const double a = std::abs(s.colors[i - 1][k] - r0);
    const double b = std::abs(s.colors[i][k] - r0);
    area += 0.5 * (a + b) * (s.times_h[i] - s.times_h[i - 1]);
  }
  return static_cast<double>(s.pixel_count) * area;
}

double instability_index(const DegradationSeries &s) {
  return instability_index(s, 0) + instability_index(s, 1) + instability_index(s, 2);
}

void classify(std::vector<StabilityResult> &results, double boundary) {
  if (!(boundary >= 0.0))
    throw DomainError("decision boundary must be >= 0");
  for (auto &r : results) {
    r.boundary = boundary;
    r.degraded = r.i_c > boundary;
  }
}

std::vector<StabilityResult> assess_stability(const std::vector<DegradationSeries> &series,
                                              const CompositionMap *composition,
                                              double boundary) {
  std::map<int, double> x_of;
  if (composition)
    for (const auto &e : *composition)
      x_of[e.region_id] = e.x;
  std::vector<StabilityResult> out;
  std::vector<int> missing;
  for (const auto &s : series) {
    StabilityResult r;
    r.region_id = s.region_id;
    r.i_c = instability_index(s);
    r.x_composition = std::numeric_limits<double>::quiet_NaN();
    if (composition) {
      auto it = x_of.find(s.region_id);
      if (it == x_of.end())
        missing.push_back(s.region_id);
      else
        r.x_composition = it->second;
    }
    out.push_back(r);
  }
  if (!missing.empty()) {
    std::string msg = "no composition entry for region(s):";
    for (int id : missing)
      msg += " " + std::to_string(id);
    throw DomainError(msg);
  }
  classify(out, boundary);
  return out;
}

void save_stability_csv(const std::vector<StabilityResult> &results,
                        const std::filesystem::path &file) {
  CsvWriter csv({"region_id", "x_composition", "i_c_px_hr", "degraded"});
  for (const auto &r : results)
    csv.row({std::to_string(r.region_id),
             std::isnan(r.x_composition) ? std::string() : format_double(r.x_composition),
             format_double(r.i_c), r.degraded ? "1" : "0"});
  csv.save(file);
}

void save_series_strip(const std::vector<DegradationSeries> &series,
                       const std::filesystem::path &file) {
  if (series.empty())
    throw DomainError("no series to plot");
  const std::size_t frames = series.front().colors.size();
  PngImage img;
  img.width = static_cast<int>(frames);
  img.height = static_cast<int>(series.size());
  img.channels = 3;
  img.bit_depth = 8;
  img.samples.resize(frames * series.size() * 3);
  for (std::size_t r = 0; r < series.size(); ++r)
    for (std::size_t f = 0; f < frames && f < series[r].colors.size(); ++f)
      for (int k = 0; k < 3; ++k)
        img.samples[(r * frames + f) * 3 + k] = static_cast<std::uint16_t>(
            std::lround(std::clamp(series[r].colors[f][k], 0.0, 1.0) * 255.0));
  write_png(img, file);
}

} // namespace autochar

#include "autochar/vision_segment.hpp"

#include "autochar/csv.hpp"
#include "autochar/error.hpp"
#include "autochar/morphology.hpp"
#include "autochar/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>

namespace autochar {
namespace {

constexpr int kNbr8[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                             {1, 0},   {-1, 1}, {0, 1},  {1, 1}};

CropRect effective_crop(const std::optional<CropRect> &crop, int w, int h) {
  if (!crop || crop->width == 0 || crop->height == 0)
    return {0, 0, w, h};
  const CropRect &c = *crop;
  if (c.x < 0 || c.y < 0 || c.width < 0 || c.height < 0 ||
      c.x + c.width > w || c.y + c.height > h)
    throw DomainError("segment: crop rectangle outside the image");
  return c;
}

template <typename T> Grid<T> crop_grid(const Grid<T> &in, const CropRect &c) {
  Grid<T> out(c.width, c.height);
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x)
      out.at(x, y) = in.at(c.x + x, c.y + y);
  return out;
}

// Fills background pixels with the most frequent label in the window (ties to
// the smaller label); labelled pixels keep their label.
LabelMap dilate_labels(const LabelMap &in, int kappa) {
  const int lo = -(kappa / 2);
  const int hi = lo + kappa - 1;
  LabelMap out = in;
  std::map<std::int32_t, int> counts;
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      if (in.at(x, y) != 0)
        continue;
      counts.clear();
      for (int dy = lo; dy <= hi; ++dy)
        for (int dx = lo; dx <= hi; ++dx) {
          const int xx = std::clamp(x + dx, 0, in.width - 1);
          const int yy = std::clamp(y + dy, 0, in.height - 1);
          if (const auto l = in.at(xx, yy))
            ++counts[l];
        }
      std::int32_t best = 0;
      int best_n = 0;
      for (const auto &[l, n] : counts)
        if (n > best_n) {
          best = l;
          best_n = n;
        }
      out.at(x, y) = best;
    }
  return out;
}

// Keeps only the largest 8-connected fragment of every label.
void drop_fragments(LabelMap &labels) {
  Grid<std::int32_t> comp(labels.width, labels.height, -1);
  struct Frag {
    std::int32_t label;
    std::size_t size;
  };
  std::vector<Frag> frags;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    const auto l = labels.data[start];
    if (l == 0 || comp.data[start] >= 0)
      continue;
    const auto id = static_cast<std::int32_t>(frags.size());
    frags.push_back({l, 0});
    comp.data[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      ++frags[id].size;
      const int x = static_cast<int>(p % labels.width);
      const int y = static_cast<int>(p / labels.width);
      for (const auto &o : kNbr8) {
        const int xx = x + o[0], yy = y + o[1];
        if (!labels.contains(xx, yy))
          continue;
        const auto q = labels.index(xx, yy);
        if (labels.data[q] == l && comp.data[q] < 0) {
          comp.data[q] = id;
          queue.push_back(q);
        }
      }
    }
  }
  std::map<std::int32_t, std::int32_t> keep; // label -> fragment id
  for (std::size_t i = 0; i < frags.size(); ++i) {
    auto it = keep.find(frags[i].label);
    if (it == keep.end() || frags[i].size > frags[it->second].size)
      keep[frags[i].label] = static_cast<std::int32_t>(i);
  }
  for (std::size_t p = 0; p < labels.size(); ++p)
    if (labels.data[p] != 0 && keep[labels.data[p]] != comp.data[p])
      labels.data[p] = 0;
}

struct Stats {
  std::size_t size = 0;
  double sx = 0.0, sy = 0.0;
};

// Prunes out-of-range sizes and renumbers by centroid raster order.
void prune_and_order(LabelMap &labels, double theta_min, double theta_max) {
  std::map<std::int32_t, Stats> stats;
  for (int y = 0; y < labels.height; ++y)
    for (int x = 0; x < labels.width; ++x)
      if (const auto l = labels.at(x, y)) {
        auto &s = stats[l];
        ++s.size;
        s.sx += x;
        s.sy += y;
      }
  struct Kept {
    std::int32_t label;
    double cx, cy;
    std::size_t size;
  };
  std::vector<Kept> kept;
  for (const auto &[l, s] : stats) {
    const double sz = static_cast<double>(s.size);
    if (sz < theta_min || sz > theta_max)
      continue;
    kept.push_back({l, s.sx / sz, s.sy / sz, s.size});
  }

  std::vector<std::int32_t> order_label;
  if (!kept.empty()) {
    std::vector<std::size_t> sizes;
    for (const auto &k : kept)
      sizes.push_back(k.size);
    std::nth_element(sizes.begin(), sizes.begin() + sizes.size() / 2, sizes.end());
    const double median_size = static_cast<double>(sizes[sizes.size() / 2]);
    const double row_tol = std::sqrt(median_size / std::numbers::pi); // half diameter

    std::stable_sort(kept.begin(), kept.end(), [](const Kept &a, const Kept &b) {
      return a.cy < b.cy || (a.cy == b.cy && a.cx < b.cx);
    });
    std::size_t row_start = 0;
    for (std::size_t i = 1; i <= kept.size(); ++i) {
      if (i == kept.size() || kept[i].cy - kept[row_start].cy > row_tol) {
        std::stable_sort(kept.begin() + row_start, kept.begin() + i,
                         [](const Kept &a, const Kept &b) { return a.cx < b.cx; });
        row_start = i;
      }
    }
    for (const auto &k : kept)
      order_label.push_back(k.label);
  }
  std::map<std::int32_t, std::int32_t> remap;
  for (std::size_t i = 0; i < order_label.size(); ++i)
    remap[order_label[i]] = static_cast<std::int32_t>(i + 1);
  for (auto &v : labels.data) {
    if (v == 0)
      continue;
    auto it = remap.find(v);
    v = it == remap.end() ? 0 : it->second;
  }
}

Segmentation run_pipeline(const IntensityGrid &cropped_gray,
                          const SegmentationConfig &cfg, const CropRect &crop,
                          int full_w, int full_h) {
  IntensityGrid img = cropped_gray;
  for (auto &v : img.data)
    v = 255.0 - v;

  const Mask binary = binarize(img);
  const Mask edges = morph_gradient(binary, cfg.gradient_kernel);
  Mask core(binary.width, binary.height, 0);
  for (std::size_t i = 0; i < core.size(); ++i)
    core.data[i] = binary.data[i] && !edges.data[i] ? 1 : 0;
  core = erode(core, cfg.erode_kernel);
  core = median_blur(core, cfg.median_kernel);

  const DistanceGrid dist = distance_transform(core);
  const Mask seeds = threshold_distance(dist, cfg.dist_thresh);
  const LabelMap markers = label_components(seeds);

  // Flooding stays inside the binary foreground shrunk by the dilation radius;
  // the dilation stage grows regions back to the deposit boundary.
  const Mask domain = erode(binary, cfg.dilate_kernel);
  LabelMap labels = watershed(img, markers, &domain);
  labels = dilate_labels(labels, cfg.dilate_kernel);
  labels = median_blur(labels, cfg.final_median_kernel);
  drop_fragments(labels);
  prune_and_order(labels, cfg.theta_min, cfg.theta_max);

  Segmentation out;
  out.labels = LabelMap(full_w, full_h, 0);
  for (int y = 0; y < labels.height; ++y)
    for (int x = 0; x < labels.width; ++x)
      out.labels.at(crop.x + x, crop.y + y) = labels.at(x, y);
  out.regions = regions_from_labels(out.labels);
  return out;
}

} // namespace

void SegmentationConfig::validate() const {
  for (int k : {gradient_kernel, erode_kernel, median_kernel, dilate_kernel,
                final_median_kernel})
    if (k < 1)
      throw DomainError("segmentation: kernel sizes must be >= 1");
  if (distance_kernel != 3)
    throw DomainError("segmentation: only a 3x3 chamfer distance mask is supported");
  if (!(theta_min > 0.0) || !(theta_min < theta_max))
    throw DomainError("segmentation: need 0 < theta_min < theta_max");
  if (!(dist_thresh > 0.0 && dist_thresh < 1.0))
    throw DomainError("segmentation: dist_thresh must be in (0, 1)");
}

Segmentation segment_intensity(const IntensityGrid &gray,
                               const SegmentationConfig &cfg) {
  cfg.validate();
  const CropRect c = effective_crop(cfg.crop, gray.width, gray.height);
  return run_pipeline(crop_grid(gray, c), cfg, c, gray.width, gray.height);
}

Segmentation segment(const HyperCube &cube, const SegmentationConfig &cfg) {
  cfg.validate();
  const CropRect c = effective_crop(cfg.crop, cube.width(), cube.height());
  // Grayscale of the cropped region: band mean, then min-max over the crop.
  Grid<double> mean(c.width, c.height, 0.0);
  for (std::size_t b = 0; b < cube.bands(); ++b)
    for (int y = 0; y < c.height; ++y)
      for (int x = 0; x < c.width; ++x)
        mean.at(x, y) += cube.at(c.x + x, c.y + y, b);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (auto &v : mean.data) {
    v /= static_cast<double>(cube.bands());
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  IntensityGrid gray(c.width, c.height, 0.0);
  if (hi > lo)
    for (std::size_t i = 0; i < gray.size(); ++i)
      gray.data[i] = std::clamp((mean.data[i] - lo) * 255.0 / (hi - lo), 0.0, 255.0);
  return run_pipeline(gray, cfg, c, cube.width(), cube.height());
}

Segmentation segment(const RgbFrame &frame, const SegmentationConfig &cfg) {
  return segment_intensity(grayscale(frame), cfg);
}

std::vector<SampleRegion> regions_from_labels(const LabelMap &labels) {
  std::int32_t n = 0;
  for (auto v : labels.data) {
    if (v < 0)
      throw DomainError("label map contains negative labels");
    n = std::max(n, v);
  }
  std::vector<SampleRegion> regions(static_cast<std::size_t>(n));
  for (std::int32_t i = 0; i < n; ++i)
    regions[i].id = i + 1;
  for (int y = 0; y < labels.height; ++y)
    for (int x = 0; x < labels.width; ++x)
      if (const auto l = labels.at(x, y))
        regions[l - 1].pixels.push_back({x, y});
  for (auto &r : regions) {
    double sx = 0.0, sy = 0.0;
    for (const auto &p : r.pixels) {
      sx += p.x;
      sy += p.y;
    }
    if (!r.pixels.empty()) {
      r.centroid_x = sx / static_cast<double>(r.pixels.size());
      r.centroid_y = sy / static_cast<double>(r.pixels.size());
    }
  }
  return regions;
}

void validate_label_map(const LabelMap &labels) {
  const auto regions = regions_from_labels(labels);
  Mask seen(labels.width, labels.height, 0);
  std::deque<PixelCoord> queue;
  for (const auto &r : regions) {
    if (r.pixels.empty())
      throw DomainError("label map has a gap at label " + std::to_string(r.id));
    std::size_t reached = 0;
    queue.push_back(r.pixels.front());
    seen.at(r.pixels.front().x, r.pixels.front().y) = 1;
    while (!queue.empty()) {
      const auto p = queue.front();
      queue.pop_front();
      ++reached;
      for (const auto &o : kNbr8) {
        const int xx = p.x + o[0], yy = p.y + o[1];
        if (labels.contains(xx, yy) && !seen.at(xx, yy) &&
            labels.at(xx, yy) == r.id) {
          seen.at(xx, yy) = 1;
          queue.push_back({xx, yy});
        }
      }
    }
    if (reached != r.pixels.size())
      throw DomainError("label " + std::to_string(r.id) +
                        " is not a single connected component");
  }
}

std::vector<RegionSpectra> mask_spectra(const HyperCube &cube,
                                        const std::vector<SampleRegion> &regions) {
  std::vector<RegionSpectra> out;
  out.reserve(regions.size());
  for (const auto &r : regions) {
    RegionSpectra rs;
    rs.id = r.id;
    rs.spectra.reserve(r.pixels.size());
    for (const auto &p : r.pixels) {
      if (p.x < 0 || p.y < 0 || p.x >= cube.width() || p.y >= cube.height())
        throw DomainError("region " + std::to_string(r.id) +
                          " has pixels outside the cube");
      rs.spectra.push_back(cube.spectrum(p.x, p.y));
    }
    out.push_back(std::move(rs));
  }
  return out;
}

HyperCube apply_region_mask(const HyperCube &cube, const LabelMap &labels) {
  if (labels.width != cube.width() || labels.height != cube.height())
    throw DomainError("mask: label map size does not match cube");
  std::vector<float> values(cube.values().begin(), cube.values().end());
  const std::size_t n = cube.pixels();
  std::size_t bg = 0;
  for (auto v : labels.data)
    bg += v == 0;
  if (bg == 0)
    return cube;
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    double sum = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      if (labels.data[p] == 0)
        sum += values[b * n + p];
    const auto fill = static_cast<float>(sum / static_cast<double>(bg));
    for (std::size_t p = 0; p < n; ++p)
      if (labels.data[p] == 0)
        values[b * n + p] = fill;
  }
  return HyperCube(cube.width(), cube.height(),
                   std::vector<double>(cube.wavelengths().begin(),
                                       cube.wavelengths().end()),
                   std::move(values));
}

void save_label_png(const LabelMap &labels, const std::filesystem::path &file) {
  PngImage img;
  img.width = labels.width;
  img.height = labels.height;
  img.channels = 1;
  img.bit_depth = 16;
  img.samples.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.data[i] < 0 || labels.data[i] > 65535)
      throw DomainError("label value does not fit a 16-bit PNG");
    img.samples[i] = static_cast<std::uint16_t>(labels.data[i]);
  }
  write_png(img, file);
}

LabelMap load_label_png(const std::filesystem::path &file) {
  const PngImage img = read_png(file);
  if (img.channels != 1)
    throw FormatError("label map must be a grayscale PNG: " + file.string());
  LabelMap labels(img.width, img.height, 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels.data[i] = img.samples[i];
  return labels;
}

void save_region_table(const std::vector<SampleRegion> &regions,
                       const std::filesystem::path &file) {
  CsvWriter csv({"id", "centroid_x", "centroid_y", "size"});
  for (const auto &r : regions)
    csv.row({std::to_string(r.id), format_double(r.centroid_x),
             format_double(r.centroid_y), std::to_string(r.size())});
  csv.save(file);
}

} // namespace autochar

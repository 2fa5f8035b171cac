#pragma once

#include "autochar/cube_io.hpp"
#include "autochar/grid.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace autochar {

struct CropRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct SegmentationConfig {
  int gradient_kernel = 12;
  int erode_kernel = 3;
  int median_kernel = 7;
  int distance_kernel = 3; // chamfer mask size; only 3 is supported
  int dilate_kernel = 5;
  int final_median_kernel = 7;
  double theta_min = 100.0;   // px
  double theta_max = 10000.0; // px
  double dist_thresh = 0.4;   // fraction of the distance-transform maximum
  std::optional<CropRect> crop;

  // Throws DomainError on out-of-range fields.
  void validate() const;
};

struct PixelCoord {
  int x = 0;
  int y = 0;
};

struct SampleRegion {
  int id = 0;
  std::vector<PixelCoord> pixels; // raster order
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  std::size_t size() const { return pixels.size(); }
};

struct Segmentation {
  LabelMap labels;
  std::vector<SampleRegion> regions; // regions[i].id == i + 1
};

// Full deposit segmentation: crop, grayscale, invert, Otsu binarize, edge
// band removal (morphological gradient), erode, median, chamfer distance,
// seed threshold, label, watershed, dilate, median, size pruning. Labels are
// renumbered 1..N in raster order of region centroids. The returned label map
// has the uncropped image size.
Segmentation segment(const HyperCube &cube, const SegmentationConfig &cfg = {});
Segmentation segment(const RgbFrame &frame, const SegmentationConfig &cfg = {});
// Same pipeline starting from a [0, 255] intensity image (before inversion).
Segmentation segment_intensity(const IntensityGrid &gray,
                               const SegmentationConfig &cfg = {});

// Regions of a compact label map, in label order.
std::vector<SampleRegion> regions_from_labels(const LabelMap &labels);

// Label set is {0..N} without gaps and every label is one 8-connected
// component. Throws DomainError otherwise.
void validate_label_map(const LabelMap &labels);

// Per-region pixel spectra (background discarded), in region order.
struct RegionSpectra {
  int id = 0;
  std::vector<std::vector<float>> spectra;
};
std::vector<RegionSpectra> mask_spectra(const HyperCube &cube,
                                        const std::vector<SampleRegion> &regions);

// Cube with every background pixel (label 0) replaced by the per-band mean of
// the background.
HyperCube apply_region_mask(const HyperCube &cube, const LabelMap &labels);

// 16-bit grayscale PNG of label values.
void save_label_png(const LabelMap &labels, const std::filesystem::path &file);
LabelMap load_label_png(const std::filesystem::path &file);

// CSV: id,centroid_x,centroid_y,size
void save_region_table(const std::vector<SampleRegion> &regions,
                       const std::filesystem::path &file);

} // namespace autochar

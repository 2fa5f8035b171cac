#include "autochar/error.hpp"
#include "autochar/morphology.hpp"
#include "autochar/synth.hpp"
#include "autochar/vision_segment.hpp"
#include "temp_dir.hpp"

#include <doctest.h>

#include <cmath>

using namespace autochar;

namespace {

struct Disk {
  double cx, cy, r;
};

// Dark disks on a bright field, as the camera sees deposits.
IntensityGrid render(int w, int h, const std::vector<Disk> &disks, LabelMap *truth = nullptr) {
  IntensityGrid g(w, h, 230.0);
  if (truth)
    *truth = LabelMap(w, h, 0);
  for (std::size_t i = 0; i < disks.size(); ++i)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double dx = x + 0.5 - disks[i].cx, dy = y + 0.5 - disks[i].cy;
        if (dx * dx + dy * dy <= disks[i].r * disks[i].r) {
          g.at(x, y) = 50.0;
          if (truth)
            truth->at(x, y) = static_cast<std::int32_t>(i + 1);
        }
      }
  return g;
}

double iou(const LabelMap &a, int la, const LabelMap &b, int lb) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.data[i] == la, y = b.data[i] == lb;
    inter += x && y;
    uni += x || y;
  }
  return uni ? static_cast<double>(inter) / uni : 0.0;
}

} // namespace

TEST_CASE("grid of disks segments one-to-one in raster order") {
  std::vector<Disk> disks;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c)
      disks.push_back({20.0 + 36 * c, 20.0 + 36 * r + (c % 2 ? 1.5 : -1.5), 13.0 + (c + r) % 3});
  LabelMap truth;
  const auto g = render(150, 112, disks, &truth);
  const auto seg = segment_intensity(g);
  REQUIRE(seg.regions.size() == disks.size());
  for (std::size_t i = 0; i < disks.size(); ++i) {
    const auto &reg = seg.regions[i];
    CHECK(reg.id == static_cast<int>(i + 1));
    CHECK(std::abs(reg.centroid_x + 0.5 - disks[i].cx) < 1.0);
    CHECK(std::abs(reg.centroid_y + 0.5 - disks[i].cy) < 1.0);
    CHECK(iou(seg.labels, reg.id, truth, static_cast<int>(i + 1)) >= 0.9);
  }
  validate_label_map(seg.labels);
}

TEST_CASE("touching deposits are split by the watershed") {
  const auto g = render(80, 40, {{24, 20, 14}, {49, 20, 14}});
  const auto seg = segment_intensity(g);
  REQUIRE(seg.regions.size() == 2);
  CHECK(seg.regions[0].centroid_x < seg.regions[1].centroid_x);
  CHECK(seg.regions[0].size() > 450);
  CHECK(seg.regions[1].size() > 450);
}

TEST_CASE("size pruning and blank images") {
  const auto g = render(120, 40, {{20, 20, 14}, {60, 20, 8}, {95, 20, 16}});
  SegmentationConfig cfg;
  cfg.theta_min = 400;
  const auto seg = segment_intensity(g, cfg);
  CHECK(seg.regions.size() == 2);
  cfg.theta_max = 700;
  CHECK(segment_intensity(g, cfg).regions.size() == 1);
  CHECK(segment_intensity(IntensityGrid(30, 30, 200.0)).regions.empty());
}

TEST_CASE("crop limits the search and keeps full-size labels") {
  const auto g = render(120, 40, {{20, 20, 14}, {80, 20, 14}});
  SegmentationConfig cfg;
  cfg.crop = CropRect{50, 0, 70, 40};
  const auto seg = segment_intensity(g, cfg);
  CHECK(seg.labels.width == 120);
  REQUIRE(seg.regions.size() == 1);
  CHECK(seg.regions[0].centroid_x > 60);
  cfg.crop = CropRect{100, 0, 70, 40};
  CHECK_THROWS_AS(segment_intensity(g, cfg), DomainError);
}

TEST_CASE("config validation") {
  SegmentationConfig cfg;
  cfg.theta_min = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.dist_thresh = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.median_kernel = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("label map validation catches gaps and split labels") {
  LabelMap m(5, 1, 0);
  m.data = {1, 0, 3, 0, 0};
  CHECK_THROWS_AS(validate_label_map(m), DomainError);
  m.data = {1, 0, 1, 0, 2};
  CHECK_THROWS_AS(validate_label_map(m), DomainError);
  m.data = {1, 1, 0, 2, 2};
  CHECK_NOTHROW(validate_label_map(m));
}

TEST_CASE("hyperspectral cube segmentation recovers planted disks") {
  SceneSpec sc;
  sc.width = 100;
  sc.height = 50;
  sc.wavelengths = default_wavelengths(10.0);
  sc.disks = {{25, 25, 14, 1.5}, {75, 25, 13, 1.9}};
  const auto cube = synth_cube(sc);
  const auto truth = planted_labels(sc);
  const auto seg = segment(cube);
  REQUIRE(seg.regions.size() == 2);
  CHECK(iou(seg.labels, 1, truth, 1) >= 0.9);
  CHECK(iou(seg.labels, 2, truth, 2) >= 0.9);

  const auto spectra = mask_spectra(cube, seg.regions);
  REQUIRE(spectra.size() == 2);
  CHECK(spectra[0].spectra.size() == seg.regions[0].size());
  CHECK(spectra[0].spectra[0].size() == cube.bands());

  const auto masked = apply_region_mask(cube, seg.labels);
  // Background becomes a per-band constant.
  CHECK(masked.at(0, 0, 3) == masked.at(99, 49, 3));
  const auto &p = seg.regions[0].pixels[0];
  CHECK(masked.at(p.x, p.y, 3) == cube.at(p.x, p.y, 3));
}

TEST_CASE("frame segmentation uses absolute luma") {
  std::vector<std::uint8_t> rgb(60 * 40 * 3, 235);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 60; ++x)
      if ((x - 30) * (x - 30) + (y - 20) * (y - 20) <= 14 * 14)
        for (int k = 0; k < 3; ++k)
          rgb[3 * (y * 60 + x) + k] = 40;
  const auto seg = segment(RgbFrame(60, 40, 0, rgb));
  CHECK(seg.regions.size() == 1);
}

TEST_CASE("label png and region table round trip") {
  TempDir tmp;
  const auto seg = segment_intensity(render(80, 40, {{20, 20, 14}, {60, 20, 14}}));
  save_label_png(seg.labels, tmp / "l.png");
  CHECK(load_label_png(tmp / "l.png") == seg.labels);
  save_region_table(seg.regions, tmp / "r.csv");
  CHECK(std::filesystem::file_size(tmp / "r.csv") > 20);
  const auto regions = regions_from_labels(seg.labels);
  CHECK(regions.size() == 2);
  CHECK(regions[1].centroid_x == doctest::Approx(seg.regions[1].centroid_x));
}

#pragma once

#include "autochar/grid.hpp"

#include <optional>

namespace autochar {

// Square kappa x kappa structuring elements throughout. For even kappa the
// window spans offsets [-kappa/2, kappa - 1 - kappa/2]. Out-of-range samples
// replicate the nearest edge pixel.

// Otsu threshold over the 256-bin histogram of round(gray). Foreground is
// gray > threshold. Equal between-class variance resolves to the lowest
// threshold. nullopt when no threshold splits the image into two classes.
std::optional<int> otsu_threshold(const IntensityGrid &gray);
Mask binarize(const IntensityGrid &gray);

template <typename T> Grid<T> erode(const Grid<T> &in, int kappa);
template <typename T> Grid<T> dilate(const Grid<T> &in, int kappa);
template <typename T> Grid<T> morph_gradient(const Grid<T> &in, int kappa);
template <typename T> Grid<T> median_blur(const Grid<T> &in, int kappa);

// Chamfer distance (weights 1, sqrt 2) from each foreground pixel to the
// nearest background pixel; pixels outside the grid count as background.
DistanceGrid distance_transform(const Mask &mask);

// dist >= tau * max(dist), restricted to dist > 0. Empty when max is 0.
Mask threshold_distance(const DistanceGrid &dist, double tau);

// 8-connected components labelled 1..N in first-encounter raster order.
LabelMap label_components(const Mask &mask);

// Marker-seeded priority flood over the 3x3 morphological gradient of `gray`
// (8-connected, FIFO within equal priority). Pixels reached from two
// different labels become watershed lines (0). Only pixels inside `domain`
// (all pixels when absent) are flooded; marker pixels are kept as given.
LabelMap watershed(const IntensityGrid &gray, const LabelMap &markers,
                   const Mask *domain = nullptr);

} // namespace autochar

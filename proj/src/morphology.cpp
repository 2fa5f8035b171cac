#include "autochar/morphology.hpp"

#include "autochar/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <tuple>

namespace autochar {
namespace {

void check_kernel(int kappa) {
  if (kappa < 1)
    throw DomainError("kernel size must be >= 1");
}

// Window offsets for a kappa-wide kernel anchored at its centre.
std::pair<int, int> window(int kappa) {
  const int lo = -(kappa / 2);
  return {lo, lo + kappa - 1};
}

template <typename T, typename Op>
Grid<T> separable_filter(const Grid<T> &in, int kappa, Op op) {
  check_kernel(kappa);
  const auto [lo, hi] = window(kappa);
  Grid<T> tmp(in.width, in.height);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      T acc = in.at(std::clamp(x + lo, 0, in.width - 1), y);
      for (int d = lo + 1; d <= hi; ++d)
        acc = op(acc, in.at(std::clamp(x + d, 0, in.width - 1), y));
      tmp.at(x, y) = acc;
    }
  Grid<T> out(in.width, in.height);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      T acc = tmp.at(x, std::clamp(y + lo, 0, in.height - 1));
      for (int d = lo + 1; d <= hi; ++d)
        acc = op(acc, tmp.at(x, std::clamp(y + d, 0, in.height - 1)));
      out.at(x, y) = acc;
    }
  return out;
}

} // namespace

std::optional<int> otsu_threshold(const IntensityGrid &gray) {
  std::array<double, 256> hist{};
  for (double v : gray.data)
    hist[static_cast<std::size_t>(std::clamp(std::lround(v), 0L, 255L))] += 1.0;
  const double total = static_cast<double>(gray.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i)
    sum_all += i * hist[i];

  std::optional<int> best;
  double best_var = -1.0;
  double w0 = 0.0, sum0 = 0.0;
  for (int t = 0; t < 256; ++t) {
    w0 += hist[t];
    sum0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 <= 0.0 || w1 <= 0.0)
      continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best = t;
    }
  }
  return best;
}

Mask binarize(const IntensityGrid &gray) {
  Mask out(gray.width, gray.height, 0);
  const auto t = otsu_threshold(gray);
  if (!t)
    return out;
  for (std::size_t i = 0; i < gray.size(); ++i)
    out.data[i] = std::lround(gray.data[i]) > *t ? 1 : 0;
  return out;
}

template <typename T> Grid<T> erode(const Grid<T> &in, int kappa) {
  return separable_filter(in, kappa, [](T a, T b) { return std::min(a, b); });
}

template <typename T> Grid<T> dilate(const Grid<T> &in, int kappa) {
  return separable_filter(in, kappa, [](T a, T b) { return std::max(a, b); });
}

template <typename T> Grid<T> morph_gradient(const Grid<T> &in, int kappa) {
  const Grid<T> d = dilate(in, kappa);
  const Grid<T> e = erode(in, kappa);
  Grid<T> out(in.width, in.height);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data[i] = static_cast<T>(d.data[i] - e.data[i]);
  return out;
}

template <typename T> Grid<T> median_blur(const Grid<T> &in, int kappa) {
  check_kernel(kappa);
  const auto [lo, hi] = window(kappa);
  Grid<T> out(in.width, in.height);
  std::vector<T> buf(static_cast<std::size_t>(kappa) * kappa);
  const std::size_t mid = buf.size() / 2;
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      std::size_t k = 0;
      for (int dy = lo; dy <= hi; ++dy) {
        const int yy = std::clamp(y + dy, 0, in.height - 1);
        for (int dx = lo; dx <= hi; ++dx)
          buf[k++] = in.at(std::clamp(x + dx, 0, in.width - 1), yy);
      }
      std::nth_element(buf.begin(), buf.begin() + mid, buf.end());
      out.at(x, y) = buf[mid];
    }
  return out;
}

template Grid<std::uint8_t> erode(const Grid<std::uint8_t> &, int);
template Grid<std::uint8_t> dilate(const Grid<std::uint8_t> &, int);
template Grid<std::uint8_t> morph_gradient(const Grid<std::uint8_t> &, int);
template Grid<std::uint8_t> median_blur(const Grid<std::uint8_t> &, int);
template Grid<double> erode(const Grid<double> &, int);
template Grid<double> dilate(const Grid<double> &, int);
template Grid<double> morph_gradient(const Grid<double> &, int);
template Grid<double> median_blur(const Grid<double> &, int);
template Grid<std::int32_t> median_blur(const Grid<std::int32_t> &, int);

DistanceGrid distance_transform(const Mask &mask) {
  // One-pixel background frame makes the image border count as background.
  const int w = mask.width + 2;
  const int h = mask.height + 2;
  constexpr double kInf = 1e30;
  const double diag = std::sqrt(2.0);
  Grid<double> d(w, h, 0.0);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      d.at(x + 1, y + 1) = mask.at(x, y) ? kInf : 0.0;

  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      double &v = d.at(x, y);
      if (v == 0.0)
        continue;
      v = std::min({v, d.at(x - 1, y) + 1.0, d.at(x, y - 1) + 1.0,
                    d.at(x - 1, y - 1) + diag, d.at(x + 1, y - 1) + diag});
    }
  for (int y = h - 2; y >= 1; --y)
    for (int x = w - 2; x >= 1; --x) {
      double &v = d.at(x, y);
      if (v == 0.0)
        continue;
      v = std::min({v, d.at(x + 1, y) + 1.0, d.at(x, y + 1) + 1.0,
                    d.at(x + 1, y + 1) + diag, d.at(x - 1, y + 1) + diag});
    }

  DistanceGrid out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      out.at(x, y) = d.at(x + 1, y + 1);
  return out;
}

Mask threshold_distance(const DistanceGrid &dist, double tau) {
  Mask out(dist.width, dist.height, 0);
  double mx = 0.0;
  for (double v : dist.data)
    mx = std::max(mx, v);
  if (mx <= 0.0)
    return out;
  const double cut = tau * mx;
  for (std::size_t i = 0; i < dist.size(); ++i)
    out.data[i] = (dist.data[i] > 0.0 && dist.data[i] >= cut) ? 1 : 0;
  return out;
}

LabelMap label_components(const Mask &mask) {
  // Two-pass union-find; final labels follow the raster order in which each
  // component's first pixel appears.
  const std::size_t n = mask.size();
  std::vector<std::int32_t> parent(n);
  for (std::size_t i = 0; i < n; ++i)
    parent[i] = static_cast<std::int32_t>(i);
  auto find = [&](std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b)
      return;
    if (a < b)
      parent[b] = a;
    else
      parent[a] = b;
  };
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y))
        continue;
      const auto i = static_cast<std::int32_t>(mask.index(x, y));
      constexpr int kPrev[4][2] = {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
      for (const auto &o : kPrev) {
        const int xx = x + o[0], yy = y + o[1];
        if (mask.contains(xx, yy) && mask.at(xx, yy))
          unite(i, static_cast<std::int32_t>(mask.index(xx, yy)));
      }
    }
  LabelMap out(mask.width, mask.height, 0);
  std::vector<std::int32_t> root_label(n, 0);
  std::int32_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.data[i])
      continue;
    const auto r = find(static_cast<std::int32_t>(i));
    if (root_label[r] == 0)
      root_label[r] = ++next;
    out.data[i] = root_label[r];
  }
  return out;
}

LabelMap watershed(const IntensityGrid &gray, const LabelMap &markers,
                   const Mask *domain) {
  if (gray.width != markers.width || gray.height != markers.height)
    throw DomainError("watershed: marker map size does not match image");
  if (domain && (domain->width != gray.width || domain->height != gray.height))
    throw DomainError("watershed: domain mask size does not match image");

  const IntensityGrid relief = morph_gradient(gray, 3);
  LabelMap out = markers;
  constexpr std::int32_t kQueued = -1;
  constexpr std::int32_t kLine = -2;

  // (priority, insertion order, pixel index)
  using Item = std::tuple<double, std::uint64_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  std::uint64_t order = 0;
  constexpr int kNbr[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                              {1, 0},   {-1, 1}, {0, 1},  {1, 1}};

  auto floodable = [&](int x, int y) {
    return out.at(x, y) == 0 && (!domain || domain->at(x, y));
  };
  auto push_neighbours = [&](int x, int y) {
    for (const auto &o : kNbr) {
      const int xx = x + o[0], yy = y + o[1];
      if (!out.contains(xx, yy) || !floodable(xx, yy))
        continue;
      out.at(xx, yy) = kQueued;
      queue.emplace(relief.at(xx, yy), order++, out.index(xx, yy));
    }
  };

  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      if (markers.at(x, y) > 0)
        push_neighbours(x, y);

  while (!queue.empty()) {
    const auto [prio, ord, idx] = queue.top();
    queue.pop();
    const int x = static_cast<int>(idx % out.width);
    const int y = static_cast<int>(idx / out.width);
    std::int32_t label = 0;
    bool conflict = false;
    for (const auto &o : kNbr) {
      const int xx = x + o[0], yy = y + o[1];
      if (!out.contains(xx, yy))
        continue;
      const std::int32_t l = out.at(xx, yy);
      if (l <= 0)
        continue;
      if (label == 0)
        label = l;
      else if (l != label)
        conflict = true;
    }
    if (conflict || label == 0) {
      out.at(x, y) = kLine;
      continue;
    }
    out.at(x, y) = label;
    push_neighbours(x, y);
  }
  for (auto &v : out.data)
    if (v < 0)
      v = 0;
  return out;
}

} // namespace autochar

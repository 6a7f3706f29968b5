#include "drpipe/perception/inpaint.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "drpipe/core/error.hpp"

namespace drpipe::perception {

namespace {

struct HoleComponent {
  std::vector<std::size_t> pixels;  // frame indices
  std::uint32_t x0, y0, x1, y1;
};

std::vector<HoleComponent> hole_components(const core::InstanceMask& mask) {
  const std::uint32_t w = mask.width();
  const std::uint32_t h = mask.height();
  const auto labels = mask.labels();
  std::vector<std::uint8_t> seen(labels.size(), 0);
  std::vector<HoleComponent> out;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (labels[start] == 0 || seen[start]) continue;
    HoleComponent c{{start}, w, h, 0, 0};
    seen[start] = 1;
    for (std::size_t head = 0; head < c.pixels.size(); ++head) {
      const std::size_t p = c.pixels[head];
      const auto x = std::uint32_t(p % w);
      const auto y = std::uint32_t(p / w);
      c.x0 = std::min(c.x0, x);
      c.y0 = std::min(c.y0, y);
      c.x1 = std::max(c.x1, x);
      c.y1 = std::max(c.y1, y);
      auto visit = [&](std::size_t q) {
        if (labels[q] != 0 && !seen[q]) {
          seen[q] = 1;
          c.pixels.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    out.push_back(std::move(c));
  }
  return out;
}

// Relaxes one hole component in place inside `rgb`.
void fill_component(const HoleComponent& comp, const core::InstanceMask& mask, std::vector<std::uint8_t>& rgb,
                    const InpaintQuality& quality) {
  const std::uint32_t w = mask.width();
  const std::uint32_t h = mask.height();
  const auto labels = mask.labels();

  // Working window: bounding box plus a one-pixel margin, clipped.
  const std::uint32_t wx0 = comp.x0 > 0 ? comp.x0 - 1 : 0;
  const std::uint32_t wy0 = comp.y0 > 0 ? comp.y0 - 1 : 0;
  const std::uint32_t wx1 = std::min(comp.x1 + 1, w - 1);
  const std::uint32_t wy1 = std::min(comp.y1 + 1, h - 1);
  const std::uint32_t ww = wx1 - wx0 + 1;
  const std::uint32_t wh = wy1 - wy0 + 1;
  auto local = [&](std::uint32_t x, std::uint32_t y) { return std::size_t(y - wy0) * ww + (x - wx0); };

  std::array<std::vector<double>, 3> cur;
  for (int c = 0; c < 3; ++c) {
    cur[c].resize(std::size_t(ww) * wh);
    for (std::uint32_t y = wy0; y <= wy1; ++y) {
      for (std::uint32_t x = wx0; x <= wx1; ++x) cur[c][local(x, y)] = rgb[(std::size_t(y) * w + x) * 3 + c];
    }
  }

  // Neighbour lists in window coordinates, and the boundary mean.
  const std::size_t m = comp.pixels.size();
  std::vector<std::size_t> cell(m);
  std::vector<std::array<std::size_t, 4>> nbr(m);
  std::vector<std::uint8_t> nbr_count(m, 0);
  std::vector<std::uint8_t> is_boundary(std::size_t(ww) * wh, 0);
  std::array<double, 3> boundary_sum{0, 0, 0};
  std::size_t boundary_n = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t p = comp.pixels[i];
    const auto x = std::uint32_t(p % w);
    const auto y = std::uint32_t(p / w);
    cell[i] = local(x, y);
    auto add = [&](std::uint32_t nx, std::uint32_t ny) {
      const std::size_t li = local(nx, ny);
      nbr[i][nbr_count[i]++] = li;
      if (labels[std::size_t(ny) * w + nx] == 0 && !is_boundary[li]) {
        is_boundary[li] = 1;
        for (int c = 0; c < 3; ++c) boundary_sum[c] += cur[c][li];
        ++boundary_n;
      }
    };
    if (x > 0) add(x - 1, y);
    if (x + 1 < w) add(x + 1, y);
    if (y > 0) add(x, y - 1);
    if (y + 1 < h) add(x, y + 1);
  }
  if (boundary_n == 0) {
    fail(ErrorCode::kNoBoundary, "hole of " + std::to_string(m) + " pixels touches no background pixel");
  }

  std::vector<double> next(m);
  for (int c = 0; c < 3; ++c) {
    auto& v = cur[c];
    const double init = boundary_sum[c] / double(boundary_n);
    for (std::size_t i = 0; i < m; ++i) v[cell[i]] = init;

    const bool converged_mode = quality.mode == InpaintQuality::Mode::kConverged;
    const std::uint32_t limit = converged_mode ? quality.max_iters : quality.iters;
    for (std::uint32_t it = 0; it < limit; ++it) {
      double max_change = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::uint8_t k = 0; k < nbr_count[i]; ++k) s += v[nbr[i][k]];
        next[i] = s / double(nbr_count[i]);
        max_change = std::max(max_change, std::abs(next[i] - v[cell[i]]));
      }
      for (std::size_t i = 0; i < m; ++i) v[cell[i]] = next[i];
      if (converged_mode && max_change < quality.tol) break;
    }
    for (std::size_t i = 0; i < m; ++i) {
      rgb[comp.pixels[i] * 3 + c] = std::uint8_t(std::clamp(std::round(v[cell[i]]), 0.0, 255.0));
    }
  }
}

}  // namespace

core::Frame inpaint(const core::Frame& frame, const core::InstanceMask& mask, const InpaintQuality& quality) {
  if (mask.width() != frame.width() || mask.height() != frame.height()) {
    fail(ErrorCode::kDimMismatch, "mask and frame dimensions differ");
  }
  const auto components = hole_components(mask);
  if (components.empty()) return frame;
  const auto src = frame.rgb();
  std::vector<std::uint8_t> rgb(src.begin(), src.end());
  for (const auto& comp : components) fill_component(comp, mask, rgb, quality);
  return frame.with_rgb(std::move(rgb));
}

}  // namespace drpipe::perception

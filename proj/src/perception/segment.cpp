#include "drpipe/perception/segment.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "drpipe/core/error.hpp"

namespace drpipe::perception {

void TargetSpec::validate() const {
  if (key_colors.empty()) fail(ErrorCode::kInvalidConfig, "target needs at least one key color");
  if (instance_id == 0) fail(ErrorCode::kInvalidConfig, "instance_id 0 is the background label");
}

namespace {

bool matches(const std::uint8_t* px, const std::vector<core::Rgb>& keys, int tol) {
  for (const auto& k : keys) {
    if (std::abs(int(px[0]) - int(k.r)) <= tol && std::abs(int(px[1]) - int(k.g)) <= tol &&
        std::abs(int(px[2]) - int(k.b)) <= tol) {
      return true;
    }
  }
  return false;
}

}  // namespace

core::InstanceMask segment(const core::Frame& frame, const TargetSpec& spec) {
  const std::uint32_t w = frame.width();
  const std::uint32_t h = frame.height();
  const std::size_t n = frame.pixel_count();
  const auto rgb = frame.rgb();

  std::vector<std::uint8_t> hit(n, 0);
  for (std::size_t i = 0; i < n; ++i) hit[i] = matches(&rgb[3 * i], spec.key_colors, spec.tolerance);

  std::vector<std::uint16_t> labels(n, 0);
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::size_t> component;
  std::uint32_t next = 1;
  for (std::size_t start = 0; start < n; ++start) {
    if (!hit[start] || seen[start]) continue;
    component.clear();
    component.push_back(start);
    seen[start] = 1;
    for (std::size_t head = 0; head < component.size(); ++head) {
      const std::size_t p = component[head];
      const std::uint32_t x = std::uint32_t(p % w);
      const std::uint32_t y = std::uint32_t(p / w);
      auto visit = [&](std::size_t q) {
        if (hit[q] && !seen[q]) {
          seen[q] = 1;
          component.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    if (component.size() < spec.min_instance_px) continue;
    if (next > std::numeric_limits<std::uint16_t>::max()) break;
    for (std::size_t p : component) labels[p] = std::uint16_t(next);
    ++next;
  }
  return core::InstanceMask(w, h, std::move(labels));
}

}  // namespace drpipe::perception

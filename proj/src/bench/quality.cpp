#include "drpipe/bench/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "drpipe/compose/placement.hpp"
#include "drpipe/core/error.hpp"
#include "drpipe/core/rotation.hpp"
#include "drpipe/pipeline/report.hpp"
#include "drpipe/scenegen/bundle_io.hpp"

namespace drpipe::bench {

namespace {

using json = nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Null inside a metric object stands for +infinity (a perfect PSNR).
double number_from(const json& j) { return j.is_null() ? kInfinity : j.get<double>(); }

void require_same_dims(std::uint32_t wa, std::uint32_t ha, std::uint32_t wb, std::uint32_t hb, const char* what) {
  if (wa != wb || ha != hb) {
    fail(ErrorCode::kDimMismatch, std::string(what) + ": " + std::to_string(wa) + "x" + std::to_string(ha) + " vs " +
                                      std::to_string(wb) + "x" + std::to_string(hb));
  }
}

Aggregate aggregate_of(const std::vector<double>& v) {
  Aggregate a;
  a.count = v.size();
  a.mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  a.p50 = pipeline::percentile(v, 50);
  a.p95 = pipeline::percentile(v, 95);
  return a;
}

// Mean absolute per-channel difference over pixels whose ground-truth
// background did not change between the two frames; nullopt if none.
std::optional<double> flicker(const core::Frame& prev_out, const core::Frame& out, const core::Frame& prev_bg,
                              const core::Frame& bg) {
  const auto pa = prev_out.rgb(), pb = out.rgb(), ga = prev_bg.rgb(), gb = bg.rgb();
  std::uint64_t sum = 0;
  std::size_t pixels = 0;
  for (std::size_t i = 0; i < ga.size(); i += 3) {
    if (ga[i] != gb[i] || ga[i + 1] != gb[i + 1] || ga[i + 2] != gb[i + 2]) continue;
    ++pixels;
    for (std::size_t c = 0; c < 3; ++c) sum += std::uint64_t(std::abs(int(pa[i + c]) - int(pb[i + c])));
  }
  if (pixels == 0) return std::nullopt;
  return double(sum) / double(pixels * 3);
}

}  // namespace

double psnr_region(const core::Frame& a, const core::Frame& b, const core::InstanceMask& region) {
  require_same_dims(a.width(), a.height(), b.width(), b.height(), "psnr frames");
  require_same_dims(a.width(), a.height(), region.width(), region.height(), "psnr region");
  const auto ra = a.rgb(), rb = b.rgb();
  const auto labels = region.labels();
  std::uint64_t sq = 0;
  std::size_t pixels = 0;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] == 0) continue;
    ++pixels;
    for (std::size_t c = 0; c < 3; ++c) {
      const int d = int(ra[3 * p + c]) - int(rb[3 * p + c]);
      sq += std::uint64_t(d * d);
    }
  }
  if (pixels == 0) fail(ErrorCode::kEmptyRegion, "psnr region has no pixels");
  if (sq == 0) return kInfinity;
  const double mse = double(sq) / double(pixels * 3);
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double mask_iou(const core::InstanceMask& a, const core::InstanceMask& b, std::uint16_t label_a,
                std::uint16_t label_b) {
  require_same_dims(a.width(), a.height(), b.width(), b.height(), "iou masks");
  const auto la = a.labels(), lb = b.labels();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < la.size(); ++i) {
    const bool in_a = la[i] == label_a, in_b = lb[i] == label_b;
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

double symmetric_rotation_error_deg(const core::Quatf& est, const core::Quatf& gt,
                                    const std::vector<core::Quatf>& symmetry_group) {
  double best = core::quat_geodesic_deg(est, gt);
  for (const auto& s : symmetry_group) best = std::min(best, core::quat_geodesic_deg(est, core::quat_multiply(gt, s)));
  return best;
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kInpaintPsnr: return "inpaint_psnr_db";
    case Metric::kMaskIou: return "mask_iou";
    case Metric::kPoseTranslationError: return "pose_t_err_m";
    case Metric::kPoseRotationError: return "pose_r_err_deg";
    case Metric::kTemporalFlicker: return "temporal_flicker";
    case Metric::kSilhouetteIou: return "silhouette_iou";
  }
  return "unknown";
}

bool higher_is_better(Metric m) {
  return m == Metric::kInpaintPsnr || m == Metric::kMaskIou || m == Metric::kSilhouetteIou;
}

double tolerance(Metric m) {
  switch (m) {
    case Metric::kInpaintPsnr: return 1.0;
    case Metric::kMaskIou: return 0.01;
    case Metric::kPoseTranslationError: return 0.005;
    case Metric::kPoseRotationError: return 1.0;
    case Metric::kTemporalFlicker: return 0.5;
    case Metric::kSilhouetteIou: return 0.01;
  }
  return 0.0;
}

json QualityReport::to_json() const {
  json metrics = json::object();
  for (const auto m : kAllMetrics) {
    const auto& a = aggregate(m);
    metrics[std::string(metric_name(m))] =
        a ? json{{"mean", number_or_null(a->mean)}, {"p50", number_or_null(a->p50)}, {"p95", number_or_null(a->p95)}}
          : json(nullptr);
  }
  json frames_json = json::array();
  for (const auto& f : per_frame) {
    json e = {{"frame_id", f.frame_id}};
    for (const auto m : kAllMetrics) e[std::string(metric_name(m))] = f[m] ? number_or_null(*f[m]) : json(nullptr);
    frames_json.push_back(std::move(e));
  }
  return {{"bundle_hash", bundle_hash},
          {"frames", frames},
          {"dropped", dropped},
          {"metrics", metrics},
          {"rates", {{"bypass", bypass_rate}, {"reuse", reuse_rate}, {"drop", drop_rate}}},
          {"per_frame", frames_json}};
}

QualityReport evaluate(const std::vector<pipeline::PipelineResult>& results, const scenegen::SequenceBundle& bundle,
                       const EvalOptions& options) {
  if (results.empty()) fail(ErrorCode::kMisaligned, "no results to evaluate");
  const auto assets = options.assets ? options.assets : std::make_shared<const compose::AssetStore>();

  QualityReport rep;
  rep.bundle_hash = scenegen::bundle_hash(bundle);
  rep.frames = results.size();
  std::array<std::vector<double>, kMetricCount> samples;
  std::size_t bypass = 0, reuse = 0;

  const pipeline::PipelineResult* prev = nullptr;
  for (const auto& r : results) {
    if (r.frame_id >= bundle.size()) {
      fail(ErrorCode::kMisaligned, "result " + std::to_string(r.frame_id) + " is past the bundle end");
    }
    if (prev && r.frame_id <= prev->frame_id) {
      fail(ErrorCode::kMisaligned, "result " + std::to_string(r.frame_id) + " is out of order");
    }
    const auto id = std::size_t(r.frame_id);
    const auto& frame = bundle.frames[id];
    if (r.inpainted.width() != frame.width() || r.inpainted.height() != frame.height()) {
      fail(ErrorCode::kMisaligned, "result " + std::to_string(id) + " does not match the bundle frame size");
    }
    const auto& gt_mask = bundle.gt_masks[id];
    const auto& gt_pose = bundle.gt_poses[id];

    FrameQuality q;
    q.frame_id = r.frame_id;
    if (gt_mask.count(1) > 0) q[Metric::kInpaintPsnr] = psnr_region(r.inpainted, bundle.gt_backgrounds[id], gt_mask);
    if (r.mask) q[Metric::kMaskIou] = mask_iou(*r.mask, gt_mask);
    if (r.pose) {
      const double dx = double(r.pose->t.x) - gt_pose.t.x, dy = double(r.pose->t.y) - gt_pose.t.y,
                   dz = double(r.pose->t.z) - gt_pose.t.z;
      q[Metric::kPoseTranslationError] = std::sqrt(dx * dx + dy * dy + dz * dz);
      q[Metric::kPoseRotationError] = symmetric_rotation_error_deg(r.pose->q, gt_pose.q, bundle.symmetry_group);
    }
    if (prev && prev->frame_id + 1 == r.frame_id) {
      q[Metric::kTemporalFlicker] =
          flicker(prev->inpainted, r.inpainted, bundle.gt_backgrounds[id - 1], bundle.gt_backgrounds[id]);
    }
    if (r.silhouette) {
      q[Metric::kSilhouetteIou] = mask_iou(*r.silhouette, gt_mask);
    } else if (r.placement) {
      const auto out = compose::render_asset(r.inpainted, assets->get(options.asset_id), *r.placement,
                                             r.inpainted.intrinsics());
      q[Metric::kSilhouetteIou] = mask_iou(out.silhouette, gt_mask);
    } else {
      // Nothing was rendered: the silhouette is empty.
      q[Metric::kSilhouetteIou] = mask_iou(core::InstanceMask::empty(frame.width(), frame.height()), gt_mask);
    }

    for (const auto m : kAllMetrics) {
      if (q[m]) samples[std::size_t(m)].push_back(*q[m]);
    }
    bypass += r.flags.frame_passer_bypass;
    reuse += r.flags.early_stop_reuse;
    rep.per_frame.push_back(q);
    prev = &r;
  }

  for (const auto m : kAllMetrics) {
    const auto& s = samples[std::size_t(m)];
    if (!s.empty()) rep.aggregates[std::size_t(m)] = aggregate_of(s);
  }
  rep.dropped = bundle.size() - results.size();
  rep.bypass_rate = double(bypass) / double(results.size());
  rep.reuse_rate = double(reuse) / double(results.size());
  rep.drop_rate = double(rep.dropped) / double(bundle.size());
  return rep;
}

Comparison compare(const json& a, const json& b) {
  Comparison out;
  try {
    const auto hash_a = a.at("bundle_hash").get<std::string>();
    const auto hash_b = b.at("bundle_hash").get<std::string>();
    if (hash_a != hash_b) fail(ErrorCode::kBundleMismatch, "reports were made on different bundles");

    auto delta = [](double va, double vb) { return va == vb ? 0.0 : vb - va; };
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %12s %12s %12s %8s  %s\n", "metric", "a.mean", "b.mean", "delta", "tol",
                  "status");
    out.table += line;

    json metrics = json::object();
    for (const auto m : kAllMetrics) {
      const std::string name(metric_name(m));
      const json& ma = a.at("metrics").value(name, json(nullptr));
      const json& mb = b.at("metrics").value(name, json(nullptr));
      json entry = {{"tolerance", tolerance(m)}, {"higher_is_better", higher_is_better(m)}};
      std::string status;
      if (ma.is_null() || mb.is_null()) {
        status = ma.is_null() && mb.is_null() ? "undefined" : "incomparable";
        entry["delta"] = nullptr;
        std::snprintf(line, sizeof line, "%-18s %12s %12s %12s %8.3g  %s\n", name.c_str(), ma.is_null() ? "-" : "set",
                      mb.is_null() ? "-" : "set", "-", tolerance(m), status.c_str());
      } else {
        json d = json::object();
        for (const auto* k : {"mean", "p50", "p95"}) d[k] = number_or_null(delta(number_from(ma.at(k)), number_from(mb.at(k))));
        entry["delta"] = d;
        const double mean_a = number_from(ma.at("mean")), mean_b = number_from(mb.at("mean"));
        const double worsening = higher_is_better(m) ? delta(mean_b, mean_a) : delta(mean_a, mean_b);
        status = worsening > tolerance(m) ? "regressed" : "ok";
        std::snprintf(line, sizeof line, "%-18s %12.4g %12.4g %12.4g %8.3g  %s\n", name.c_str(), mean_a, mean_b,
                      delta(mean_a, mean_b), tolerance(m), status.c_str());
      }
      if (status == "regressed") out.regressions.push_back(name);
      entry["status"] = status;
      metrics[name] = entry;
      out.table += line;
    }

    json rates = json::object();
    for (const auto* k : {"bypass", "reuse", "drop"}) {
      const double ra = a.at("rates").at(k).get<double>(), rb = b.at("rates").at(k).get<double>();
      rates[k] = {{"a", ra}, {"b", rb}, {"delta", rb - ra}};
      std::snprintf(line, sizeof line, "%-18s %12.4g %12.4g %12.4g\n", (std::string(k) + "_rate").c_str(), ra, rb,
                    rb - ra);
      out.table += line;
    }
    if (rates["drop"]["delta"].get<double>() > kDropTolerance) out.regressions.push_back("drop_rate");

    out.json = {{"bundle_hash", hash_a},
                {"metrics", metrics},
                {"rates", rates},
                {"regressions", out.regressions},
                {"pass", out.regressions.empty()}};
  } catch (const json::exception& e) {
    fail(ErrorCode::kManifestSchema, std::string("malformed report: ") + e.what());
  }
  return out;
}

}  // namespace drpipe::bench

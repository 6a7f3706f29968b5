// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Every check builds its own inputs; nothing is read from
// disk except a scratch directory for client outputs.

#define DOCTEST_CONFIG_DISABLE

#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "drpipe/bench/quality.hpp"
#include "drpipe/core/image_io.hpp"
#include "drpipe/endpoints/client.hpp"
#include "drpipe/endpoints/server.hpp"
#include "drpipe/perception/backends.hpp"
#include "drpipe/pipeline/end_to_end.hpp"
#include "drpipe/scenegen/bundle_io.hpp"
#include "support/perception_oracles.hpp"
#include "support/wire_oracles.hpp"

using namespace drpipe;
using json = nlohmann::json;

namespace {

// Collects failed expectations for one criterion and the facts worth printing.
class Verdict {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_ < 3) first_failures_ += (first_failures_.empty() ? "" : "; ") + what;
    ++failures_;
  }
  template <typename T>
  void note(const std::string& key, const T& value) {
    std::ostringstream os;
    os << value;
    notes_ += (notes_.empty() ? "" : ", ") + key + "=" + os.str();
  }
  bool passed() const { return failures_ == 0; }
  std::string summary() const {
    if (passed()) return notes_;
    return std::to_string(failures_) + " failed: " + first_failures_ + (notes_.empty() ? "" : " | " + notes_);
  }

 private:
  int failures_ = 0;
  std::string first_failures_;
  std::string notes_;
};

struct ScratchDir {
  ScratchDir() {
    path = std::filesystem::temp_directory_path() / ("drpipe_acceptance_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
  }
  ~ScratchDir() { std::filesystem::remove_all(path); }
  std::filesystem::path path;
};

endpoints::ServerConfig loopback_server() {
  endpoints::ServerConfig cfg;
  cfg.tcp = {"127.0.0.1", 0};
  cfg.ws.reset();
  return cfg;
}

endpoints::ClientRunSpec client_run(const scenegen::SceneConfig& scene, const std::filesystem::path& out,
                                    endpoints::ClientMode mode, std::uint16_t port) {
  endpoints::ClientRunSpec spec;
  spec.server = {"127.0.0.1", port};
  spec.generate = scene;
  spec.out_dir = out;
  spec.mode = mode;
  spec.afap = true;
  return spec;
}

scenegen::SceneConfig static_scene(std::uint32_t frames) {
  auto cfg = scenegen::default_scene_config();
  cfg.frame_count = frames;
  return cfg;
}

// ---------------------------------------------------------------------------

void throughput(Verdict& v, const std::filesystem::path& scratch) {
  const auto scene = static_scene(120);
  endpoints::EdgeServer server(loopback_server());
  server.start();

  const auto local = endpoints::run_client(
      client_run(scene, scratch / "tp_local", endpoints::ClientMode::kLocal, server.tcp_port()));
  v.expect(local.exit_code == 0, "local run failed: " + local.message);
  if (local.exit_code == 0) {
    const auto median_us = local.report["server"]["total_us"]["p50"].get<std::uint64_t>();
    v.note("local_median_total_ms", double(median_us) / 1000.0);
    v.expect(median_us <= 33300, "local median total above 33.3 ms");
  }

  const auto offload = endpoints::run_client(
      client_run(scene, scratch / "tp_offload", endpoints::ClientMode::kOffload, server.tcp_port()));
  v.expect(offload.exit_code == 0, "offload run failed: " + offload.message);
  if (offload.exit_code == 0) {
    const double rate = offload.report["results_per_s"].get<double>();
    v.note("offload_results_per_s", rate);
    v.expect(rate >= 30.0, "offload below 30 results/s");
    v.expect(offload.dropped_ids.empty(), "afap offload dropped frames");
  }
  server.stop();
}

void gating_soundness(Verdict& v) {
  const auto bundle = scenegen::generate_sequence(static_scene(100));
  const auto run = pipeline::end_to_end_once(bundle, {});
  std::size_t counted = 0, bypass = 0, reuse = 0, patch_pixels = 0;
  bool patches_ok = true, poses_ok = true;
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    const auto& r = run.results[i];
    if (i >= 2) {
      ++counted;
      bypass += r.flags.frame_passer_bypass;
      reuse += r.flags.early_stop_reuse;
    }
    if (r.flags.frame_passer_bypass) {
      const auto& p = *r.bypass_patch;
      std::size_t k = 0;
      for (int y = p.region.y0; y <= p.region.y1; ++y) {
        for (int x = p.region.x0; x <= p.region.x1; ++x, ++k) {
          if (!p.observed[k]) continue;
          ++patch_pixels;
          const auto gt = bundle.gt_backgrounds[i].pixel(std::uint32_t(x), std::uint32_t(y));
          patches_ok = patches_ok && core::Rgb{p.rgb[3 * k], p.rgb[3 * k + 1], p.rgb[3 * k + 2]} == gt;
        }
      }
    }
    if (r.flags.early_stop_reuse) {
      poses_ok = poses_ok && i > 0 && run.results[i - 1].pose && core::bit_equal(*r.pose, *run.results[i - 1].pose);
    }
  }
  const double bypass_rate = double(bypass) / double(counted), reuse_rate = double(reuse) / double(counted);
  v.note("bypass_rate", bypass_rate);
  v.note("reuse_rate", reuse_rate);
  v.note("patch_pixels_checked", patch_pixels);
  v.expect(bypass_rate >= 0.9, "bypass_rate below 0.9");
  v.expect(reuse_rate >= 0.95, "reuse_rate below 0.95");
  v.expect(patch_pixels > 0, "no bypass patch pixels to check");
  v.expect(patches_ok, "a bypass patch differs from the ground-truth background");
  v.expect(poses_ok, "a reused pose differs from its predecessor");
}

void gating_liveness(Verdict& v) {
  constexpr std::uint32_t kChangeAt = 50;
  auto scene = static_scene(100);
  scene.background_change = scenegen::BackgroundChange{kChangeAt, scenegen::BackgroundKind::kCheckerboard};
  const auto bundle = scenegen::generate_sequence(scene);
  pipeline::SessionConfig cfg;
  const auto run = pipeline::end_to_end_once(bundle, cfg);

  // An output is current when every pixel off the object shows this frame's background.
  auto current = [&](std::size_t i) {
    const auto& out = run.results[i].inpainted;
    for (std::uint32_t y = 0; y < out.height(); ++y) {
      for (std::uint32_t x = 0; x < out.width(); ++x) {
        if (bundle.gt_masks[i].at(x, y) == 0 && out.pixel(x, y) != bundle.gt_backgrounds[i].pixel(x, y)) return false;
      }
    }
    return true;
  };
  std::optional<std::size_t> first_current;
  bool stays_current = true;
  for (std::size_t i = kChangeAt; i < run.results.size(); ++i) {
    const bool ok = current(i);
    if (ok && !first_current) first_current = i;
    if (first_current && !ok) stays_current = false;
  }
  const auto bound = cfg.gating.keyframe_interval;
  v.note("keyframe_interval", bound);
  v.expect(first_current.has_value(), "the new background never reached the output");
  if (first_current) {
    v.note("frames_until_visible", *first_current - kChangeAt);
    v.expect(*first_current - kChangeAt < bound, "staleness exceeded keyframe_interval");
  }
  v.expect(stays_current, "output went stale again after the change appeared");
  v.expect(current(kChangeAt - 1), "output was stale before the change");
}

void perception_oracles(Verdict& v) {
  using perception::InpaintQuality;
  core::Rng rng(20261016);

  // Segmentation against the flood-fill oracle.
  const std::vector<core::Rgb> palette = {{220, 30, 30}, {30, 200, 40}, {90, 90, 90}, {10, 10, 10}};
  int seg_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = std::uint32_t(core::uniform_int(rng, 1, 32)), h = std::uint32_t(core::uniform_int(rng, 1, 32));
    std::vector<std::uint8_t> rgb(std::size_t(w) * h * 3);
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        auto c = palette[core::uniform_below(rng, palette.size())];
        c.g = std::uint8_t(std::clamp(int(c.g) + int(core::uniform_int(rng, -12, 12)), 0, 255));
        testing::set_pixel(rgb, w, x, y, c);
      }
    }
    const core::Frame f(testing::header(w, h), rgb);
    perception::TargetSpec spec;
    spec.key_colors = {palette[0], palette[1]};
    spec.tolerance = std::uint8_t(core::uniform_int(rng, 0, 20));
    spec.min_instance_px = std::uint32_t(core::uniform_int(rng, 1, 6));
    const auto m = perception::segment(f, spec);
    seg_mismatch += std::vector<std::uint16_t>(m.labels().begin(), m.labels().end()) != testing::flood_oracle(f, spec);
  }
  v.note("segment_frames", 200);
  v.expect(seg_mismatch == 0, std::to_string(seg_mismatch) + " segmentations differ from the oracle");

  // Converged inpainting against dense Jacobi, plus the maximum principle.
  double worst = 0.0;
  int principle_violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = std::uint32_t(core::uniform_int(rng, 18, 32)), h = std::uint32_t(core::uniform_int(rng, 18, 32));
    const auto f = testing::random_frame(rng, w, h);
    const auto m = testing::random_blob(rng, w, h, 16);
    const auto out = perception::inpaint(f, m, InpaintQuality::converged());
    std::array<int, 3> lo{255, 255, 255}, hi{0, 0, 0};
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        if (m.at(x, y)) continue;
        const bool adjacent = (x > 0 && m.at(x - 1, y)) || (x + 1 < w && m.at(x + 1, y)) ||
                              (y > 0 && m.at(x, y - 1)) || (y + 1 < h && m.at(x, y + 1));
        if (!adjacent) continue;
        const auto c = f.pixel(x, y);
        const std::array<int, 3> px{c.r, c.g, c.b};
        for (int k = 0; k < 3; ++k) lo[k] = std::min(lo[k], px[k]), hi[k] = std::max(hi[k], px[k]);
      }
    }
    for (int k = 0; k < 3; ++k) {
      const auto oracle = testing::dense_jacobi(f, m, k);
      for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
          if (!m.at(x, y)) continue;
          const auto c = out.pixel(x, y);
          const int got = k == 0 ? c.r : k == 1 ? c.g : c.b;
          worst = std::max(worst, std::abs(double(got) - oracle[std::size_t(y) * w + x]));
          principle_violations += got < lo[std::size_t(k)] || got > hi[std::size_t(k)];
        }
      }
    }
  }
  v.note("inpaint_max_abs_diff", worst);
  v.expect(worst <= 1.0, "converged inpainting more than 1 level from the oracle");
  v.expect(principle_violations == 0, "maximum principle violated");

  // Pose on the default noiseless bundle.
  const auto bundle = scenegen::generate_sequence(scenegen::default_scene_config());
  const auto feat = perception::pose_coarse(bundle.frames[0], bundle.gt_masks[0], 1);
  const auto pose = perception::pose_refine(feat, bundle.frames[0], bundle.gt_masks[0], 1);
  const auto& gt = bundle.gt_poses[0];
  const double t_rel = (core::to_eigen(pose.t) - core::to_eigen(gt.t)).norm() / core::to_eigen(gt.t).norm();
  const double r_err = testing::symmetric_rotation_error(pose.q, gt.q);
  v.note("pose_t_rel_err", t_rel);
  v.note("pose_r_err_deg", r_err);
  v.expect(t_rel <= 0.05, "translation error above 5%");
  v.expect(r_err <= 15.0, "rotation error above 15 deg");
}

void transport_suite(Verdict& v) {
  using namespace drpipe::transport;
  core::Rng rng(7401);
  int round_trip_failures = 0, size_failures = 0;
  for (int i = 0; i < 100000; ++i) {
    const Message m = testing::rand_message(rng);
    const auto bytes = encode(m);
    size_failures += bytes.size() != kEnvelopeBytes + testing::expected_payload_len(m);
    size_failures += testing::crc32_oracle(std::span(bytes).subspan(4, bytes.size() - 8)) !=
                     testing::le32(bytes, bytes.size() - 4);
    Decoder d;
    const auto r = d.feed(bytes);
    round_trip_failures += !(r.errors.empty() && r.messages.size() == 1 && r.messages[0] == m);
  }
  v.note("fuzzed", 100000);
  v.expect(round_trip_failures == 0, std::to_string(round_trip_failures) + " round trips failed");
  v.expect(size_failures == 0, "encoded size or crc differs from the formula");

  const std::vector<Message> msgs = {Hello{1, R"({"asset_id":"box"})"}, testing::small_frame(),
                                     testing::small_result()};
  const auto stream = testing::concat({encode(msgs[0]), encode(msgs[1]), encode(msgs[2])});
  std::size_t splits = 0, split_failures = 0;
  for (std::size_t i = 0; i <= stream.size(); ++i) {
    for (std::size_t j = i; j <= stream.size(); ++j) {
      Decoder d;
      std::vector<Message> got;
      bool clean = true;
      for (auto [a, b] : {std::pair{std::size_t(0), i}, std::pair{i, j}, std::pair{j, stream.size()}}) {
        auto r = d.feed(std::span(stream).subspan(a, b - a));
        clean = clean && r.errors.empty();
        for (auto& m : r.messages) got.push_back(std::move(m));
      }
      split_failures += !(clean && got == msgs);
      ++splits;
    }
  }
  v.note("splits", splits);
  v.expect(split_failures == 0, std::to_string(split_failures) + " splits decoded differently");

  // Flip every byte after the magic, outside the length field, in the middle message.
  const auto a = encode(msgs[0]), b = encode(msgs[2]), c = encode(HelloAck{9, 10});
  int undetected = 0;
  for (std::size_t pos = 4; pos < b.size(); ++pos) {
    if (pos >= 5 && pos < 9) continue;
    auto bad = b;
    bad[pos] ^= 0x01;
    std::vector<DecodeError> errors;
    const auto got = testing::decode_all(testing::concat({a, bad, c}), &errors);
    const bool ok = got.size() == 2 && got[0] == msgs[0] && got[1] == Message{HelloAck{9, 10}} &&
                    errors.size() == 1 && errors[0].kind == DecodeErrorKind::kCrcMismatch &&
                    errors[0].skipped_bytes == b.size();
    undetected += !ok;
  }
  // Garbage between messages is skipped exactly.
  for (int trial = 0; trial < 200; ++trial) {
    const auto junk = testing::rand_bytes(rng, std::size_t(core::uniform_int(rng, 1, 64)));
    std::vector<DecodeError> errors;
    const auto got = testing::decode_all(testing::concat({a, junk, c}), &errors);
    undetected += !(got.size() == 2 && errors.size() == 1 && errors[0].kind == DecodeErrorKind::kBadMagic &&
                    errors[0].skipped_bytes == junk.size());
  }
  v.expect(undetected == 0, std::to_string(undetected) + " corruptions not detected or not recovered");
}

void end_to_end_equivalence(Verdict& v, const std::filesystem::path& scratch) {
  std::vector<scenegen::SceneConfig> scenes = {static_scene(30)};
  auto moving = static_scene(30);
  core::Pose6D start = scenegen::default_object_pose(), end = start;
  end.t.x = 0.3f;
  moving.trajectory = scenegen::LinearTrajectory{start, end};
  scenes.push_back(moving);
  auto orbit = static_scene(30);
  orbit.trajectory = scenegen::OrbitTrajectory{{0.0f, 0.0f, 2.2f}, 0.25, 6.0, start.q};
  orbit.background_kind = scenegen::BackgroundKind::kNoiseTexture;
  scenes.push_back(orbit);

  endpoints::EdgeServer server(loopback_server());
  server.start();
  std::size_t frames_compared = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (const auto where : {pipeline::ComposeLocation::kServer, pipeline::ComposeLocation::kClient}) {
      const auto tag = std::to_string(s) + (where == pipeline::ComposeLocation::kServer ? "s" : "c");
      auto off_spec = client_run(scenes[s], scratch / ("eq_off_" + tag), endpoints::ClientMode::kOffload,
                                 server.tcp_port());
      off_spec.session_cfg.compose_location = where;
      auto loc_spec = off_spec;
      loc_spec.mode = endpoints::ClientMode::kLocal;
      loc_spec.out_dir = scratch / ("eq_loc_" + tag);
      const auto off = endpoints::run_client(off_spec);
      const auto loc = endpoints::run_client(loc_spec);
      v.expect(off.exit_code == 0 && loc.exit_code == 0, "client run failed for scene " + tag);
      if (off.exit_code != 0 || loc.exit_code != 0) continue;
      v.expect(off.results.size() == scenes[s].frame_count, "offload dropped frames for scene " + tag);
      for (std::size_t i = 0; i < off.results.size(); ++i) {
        const auto name = scenegen::indexed_name("composed", i, "ppm");
        const bool same = core::read_file(off_spec.out_dir / name) == core::read_file(loc_spec.out_dir / name);
        v.expect(same, "composed frame " + std::to_string(i) + " differs for scene " + tag);
        ++frames_compared;
      }
    }
  }
  server.stop();
  v.note("composed_frames_compared", frames_compared);

  std::size_t branch_frames = 0;
  for (const auto& scene : scenes) {
    const auto bundle = scenegen::generate_sequence(scene);
    pipeline::SessionConfig par, seq;
    par.parallel_branches = true;
    seq.parallel_branches = false;
    const auto a = pipeline::end_to_end_once(bundle, par);
    const auto b = pipeline::end_to_end_once(bundle, seq);
    v.expect(a.results.size() == b.results.size(), "parallel and sequential result counts differ");
    for (std::size_t i = 0; i < std::min(a.results.size(), b.results.size()); ++i) {
      v.expect(pipeline::same_outputs(a.results[i], b.results[i]),
               "parallel and sequential differ at frame " + std::to_string(i));
      ++branch_frames;
    }
  }
  v.note("branch_frames_compared", branch_frames);
}

void quality_floor(Verdict& v) {
  const auto bundle = scenegen::generate_sequence(scenegen::default_scene_config());
  pipeline::SessionConfig gated, ungated;
  ungated.gating.frame_passer_enabled = false;
  ungated.gating.early_stop_enabled = false;
  const auto rep_gated = bench::evaluate(pipeline::end_to_end_once(bundle, gated).results, bundle);
  const auto rep_ungated = bench::evaluate(pipeline::end_to_end_once(bundle, ungated).results, bundle);

  const auto& iou = rep_ungated.aggregate(bench::Metric::kMaskIou);
  const auto& psnr = rep_ungated.aggregate(bench::Metric::kInpaintPsnr);
  v.expect(iou && iou->mean == 1.0 && iou->p95 == 1.0, "mask_iou below 1.0");
  v.expect(psnr && psnr->mean >= 30.0 && psnr->p50 >= 30.0, "region PSNR below 30 dB");
  if (psnr) v.note("psnr_db", psnr->mean);

  const auto cmp = bench::compare(rep_gated.to_json(), rep_ungated.to_json());
  const auto& m = cmp.json["metrics"];
  const auto psnr_delta = m["inpaint_psnr_db"]["delta"]["mean"];
  v.expect(!psnr_delta.is_null() && std::abs(psnr_delta.get<double>()) <= 1.0, "PSNR delta outside +-1 dB");
  for (const auto* pose_metric : {"pose_t_err_m", "pose_r_err_deg"}) {
    for (const auto* k : {"mean", "p50", "p95"}) {
      const auto d = m[pose_metric]["delta"][k];
      v.expect(!d.is_null() && d.get<double>() == 0.0, std::string(pose_metric) + " delta not 0");
    }
  }
  v.expect(cmp.regressions.empty(), "compare reported a regression");
  if (!psnr_delta.is_null()) v.note("psnr_delta_db", psnr_delta.get<double>());
  v.note("bypass_delta", cmp.json["rates"]["bypass"]["delta"].get<double>());
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  ScratchDir scratch;
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"throughput", [&](Verdict& v) { throughput(v, scratch.path); }},
      {"gating_soundness", gating_soundness},
      {"gating_liveness", gating_liveness},
      {"perception_oracles", perception_oracles},
      {"transport_suite", transport_suite},
      {"end_to_end_equivalence", [&](Verdict& v) { end_to_end_equivalence(v, scratch.path); }},
      {"quality_floor", quality_floor},
  };

  int failed = 0;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& [name, check] : criteria) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      check(v);
    } catch (const std::exception& e) {
      v.expect(false, std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %-24s (%.1fs) %s\n", v.passed() ? "PASS" : "FAIL", name.c_str(), secs, v.summary().c_str());
    std::fflush(stdout);
    failed += !v.passed();
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%zu/%zu criteria passed in %.1fs\n", criteria.size() - std::size_t(failed), criteria.size(), total);
  return failed == 0 ? 0 : 1;
}

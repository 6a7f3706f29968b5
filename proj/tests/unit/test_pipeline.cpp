#include <doctest.h>

#include <filesystem>
#include <set>
#include <thread>

#include "drpipe/core/rng.hpp"
#include "drpipe/core/rotation.hpp"
#include "drpipe/pipeline/end_to_end.hpp"
#include "drpipe/pipeline/report.hpp"
#include "drpipe/pipeline/results_io.hpp"
#include "drpipe/pipeline/scheduler.hpp"
#include "drpipe/scenegen/scene.hpp"
#include "support/test_util.hpp"

using namespace drpipe;
using namespace drpipe::pipeline;
using core::Stage;

namespace {

scenegen::SceneConfig small_scene(std::uint32_t frames) {
  auto cfg = scenegen::default_scene_config();
  cfg.width = 160;
  cfg.height = 120;
  cfg.intrinsics = {150.0f, 150.0f, 80.0f, 60.0f};
  cfg.frame_count = frames;
  return cfg;
}

std::vector<scenegen::SceneConfig> scene_variety() {
  std::vector<scenegen::SceneConfig> out;
  out.push_back(small_scene(8));
  auto lin = small_scene(8);
  core::Pose6D a = scenegen::default_object_pose(), b = a;
  b.t.x = 0.25f;
  lin.trajectory = scenegen::LinearTrajectory{a, b};
  out.push_back(lin);
  auto orbit = small_scene(8);
  orbit.trajectory = scenegen::OrbitTrajectory{{0.0f, 0.0f, 2.2f}, 0.2, 12.0, a.q};
  orbit.background_kind = scenegen::BackgroundKind::kNoiseTexture;
  orbit.noise_k = 2;
  out.push_back(orbit);
  auto cam = small_scene(8);
  core::Pose6D end;
  end.t = {0.1f, 0.0f, 0.0f};
  cam.camera_motion = scenegen::LinearCamera{core::identity_pose(), end};
  cam.background_kind = scenegen::BackgroundKind::kCheckerboard;
  out.push_back(cam);
  return out;
}

// Frame with two key-coloured blocks at depth 2 m over a grey background.
core::Frame two_block_frame(std::uint64_t id) {
  const std::uint32_t w = 64, h = 48;
  std::vector<std::uint8_t> rgb(std::size_t(w) * h * 3, 90);
  std::vector<float> depth(std::size_t(w) * h, 10.0f);
  auto block = [&](std::uint32_t x0, std::uint32_t y0, core::Rgb c) {
    for (std::uint32_t y = y0; y < y0 + 10; ++y) {
      for (std::uint32_t x = x0; x < x0 + 12; ++x) {
        testing::set_pixel(rgb, w, x, y, c);
        depth[std::size_t(y) * w + x] = 2.0f + 0.01f * float(x + y);
      }
    }
  };
  block(5, 5, core::kDefaultFaceColors[0]);
  block(40, 30, core::kDefaultFaceColors[1]);
  auto hd = testing::header(w, h, id);
  hd.intrinsics = {60.0f, 60.0f, 32.0f, 24.0f};
  return core::Frame(hd, std::move(rgb), std::move(depth));
}

}  // namespace

TEST_CASE("session config json") {
  SessionConfig cfg;
  CHECK(session_config_from_json(session_config_to_json(cfg)) == cfg);
  cfg.asset_id = "pyramid";
  cfg.anchor = {compose::ScaleMode::kFixedScale, 0.5f, compose::AlignMode::kTranslationOnly};
  cfg.gating.keyframe_interval = 7;
  cfg.gating.frame_passer_enabled = false;
  cfg.compose_location = ComposeLocation::kClient;
  cfg.queue_capacity = 5;
  cfg.target.tolerance = 3;
  cfg.budget = core::budget_for_fps(60);
  CHECK(session_config_from_json(session_config_to_json(cfg)) == cfg);
  CHECK(session_config_from_json(nlohmann::json::object()) == SessionConfig{});

  CHECK_ERROR_CODE(session_config_from_json({{"queue_capacity", 0}}), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(session_config_from_json({{"anchor", {{"mode", "stretch"}}}}), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(session_config_from_json({{"target", {{"tolerance", 300}}}}), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(session_config_from_json({{"gating", {{"tau_cover", 2.0}}}}), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(session_config_from_json(nlohmann::json::array()), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(session_config_from_json({{"target_fps", "fast"}}), ErrorCode::kInvalidConfig);

  SessionConfig unknown;
  unknown.asset_id = "teapot";
  CHECK_ERROR_CODE(Session(unknown, nullptr), ErrorCode::kUnknownAsset);
}

TEST_CASE("result flag bits") {
  for (std::uint8_t b = 0; b < 16; ++b) CHECK(ResultFlags::from_bits(b).bits() == b);
  CHECK(ResultFlags{true, false, false, true}.bits() == 0b1001);
}

TEST_CASE("process_frame examples on the default static scene") {
  auto scene = scenegen::default_scene_config();
  scene.frame_count = 3;
  const auto seq = scenegen::generate_sequence(scene);
  Session session(SessionConfig{}, nullptr);

  const auto r0 = session.process_frame(seq.frames[0]);
  CHECK_FALSE(r0.flags.frame_passer_bypass);
  CHECK_FALSE(r0.flags.early_stop_reuse);
  CHECK(r0.flags.keyframe);
  CHECK_FALSE(r0.flags.no_target);
  REQUIRE(r0.pose.has_value());
  REQUIRE(r0.placement.has_value());
  REQUIRE(r0.composed.has_value());
  CHECK(r0.mask == seq.gt_masks[0]);
  CHECK(r0.timings.has(Stage::kSegment));
  CHECK(r0.timings.has(Stage::kInpaint));
  CHECK(r0.timings.has(Stage::kPoseRefine));

  const auto r1 = session.process_frame(seq.frames[1]);
  CHECK(r1.flags.frame_passer_bypass);
  CHECK(r1.flags.early_stop_reuse);
  REQUIRE(r1.pose.has_value());
  CHECK(core::bit_equal(*r1.pose, *r0.pose));
  REQUIRE(r1.bypass_patch.has_value());
  const auto& patch = *r1.bypass_patch;
  std::size_t k = 0, observed = 0;
  for (int y = patch.region.y0; y <= patch.region.y1; ++y) {
    for (int x = patch.region.x0; x <= patch.region.x1; ++x, ++k) {
      if (!patch.observed[k]) continue;
      ++observed;
      CHECK(core::Rgb{patch.rgb[3 * k], patch.rgb[3 * k + 1], patch.rgb[3 * k + 2]} ==
            seq.gt_backgrounds[1].pixel(std::uint32_t(x), std::uint32_t(y)));
    }
  }
  CHECK(observed > 0);
  // On a static scene the pasted frame is exactly the keyframe's output.
  CHECK(std::equal(r1.inpainted.rgb().begin(), r1.inpainted.rgb().end(), r0.inpainted.rgb().begin()));
  CHECK_FALSE(r1.timings.has(Stage::kSegment));
  CHECK_FALSE(r1.timings.has(Stage::kInpaint));
  CHECK_FALSE(r1.timings.has(Stage::kPoseRefine));

  // Pure background through a fresh session: nothing to remove.
  const auto& bg = seq.gt_backgrounds[2];
  Session fresh(SessionConfig{}, nullptr);
  const auto r2 = fresh.process_frame(seq.frames[2].with_rgb({bg.rgb().begin(), bg.rgb().end()}));
  CHECK(r2.flags.no_target);
  CHECK_FALSE(r2.pose.has_value());
  CHECK_FALSE(r2.placement.has_value());
  CHECK(std::equal(r2.inpainted.rgb().begin(), r2.inpainted.rgb().end(), bg.rgb().begin()));
  CHECK(r2.flags.keyframe);
  CHECK(r2.mask->count(1) == 0);

  // The original session keeps bypassing on the static scene.
  const auto r3 = session.process_frame(seq.frames[2]);
  CHECK(r3.flags.frame_passer_bypass);
}

TEST_CASE("out-of-order frames and stage failures leave the session usable") {
  const auto seq = scenegen::generate_sequence(small_scene(4));
  Session session(SessionConfig{}, nullptr);
  session.process_frame(seq.frames[1]);
  CHECK_ERROR_CODE(session.process_frame(seq.frames[0]), ErrorCode::kOutOfOrderFrame);
  CHECK_ERROR_CODE(session.process_frame(seq.frames[1]), ErrorCode::kOutOfOrderFrame);

  // No depth plane: the pose stage fails, the session survives.
  const core::Frame no_depth(seq.frames[2].header(),
                             std::vector<std::uint8_t>(seq.frames[2].rgb().begin(), seq.frames[2].rgb().end()));
  SessionConfig ungated;
  ungated.gating.frame_passer_enabled = false;
  ungated.gating.early_stop_enabled = false;
  Session s2(ungated, nullptr);
  try {
    s2.process_frame(no_depth);
    FAIL("expected a stage failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kStageFailure);
    CHECK(std::string(e.what()).find("pose_coarse") != std::string::npos);
  }
  const auto ok = s2.process_frame(seq.frames[3]);
  CHECK(ok.pose.has_value());
}

TEST_CASE("parallel and sequential branch execution agree") {
  for (const auto& scene : scene_variety()) {
    const auto seq = scenegen::generate_sequence(scene);
    for (bool gated : {true, false}) {
      SessionConfig par;
      par.gating.frame_passer_enabled = gated;
      par.gating.early_stop_enabled = gated;
      SessionConfig seqcfg = par;
      seqcfg.parallel_branches = false;
      const auto a = end_to_end_once(seq, par);
      const auto b = end_to_end_once(seq, seqcfg);
      REQUIRE(a.results.size() == b.results.size());
      for (std::size_t i = 0; i < a.results.size(); ++i) CHECK(same_outputs(a.results[i], b.results[i]));
      const auto again = end_to_end_once(seq, par);
      for (std::size_t i = 0; i < a.results.size(); ++i) CHECK(same_outputs(a.results[i], again.results[i]));
    }
  }
}

TEST_CASE("disabled gating equals the plain stage chain") {
  for (const auto& scene : scene_variety()) {
    const auto seq = scenegen::generate_sequence(scene);
    SessionConfig cfg;
    cfg.gating.frame_passer_enabled = false;
    cfg.gating.early_stop_enabled = false;
    const auto run = end_to_end_once(seq, cfg);
    const compose::AssetStore store;
    const auto& asset = store.get(cfg.asset_id);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto& f = seq.frames[i];
      const auto& r = run.results[i];
      CHECK_FALSE(r.flags.frame_passer_bypass);
      CHECK_FALSE(r.flags.early_stop_reuse);
      CHECK_FALSE(r.flags.keyframe);
      CHECK_FALSE(r.timings.has(Stage::kGate2d));
      CHECK_FALSE(r.timings.has(Stage::kGate3d));
      const auto mask = perception::segment(f, cfg.target).isolate(1);
      const auto filled = perception::inpaint(f, mask, perception::InpaintQuality::fast(cfg.inpaint_iters));
      const auto feat = perception::pose_coarse(f, mask, 1);
      const auto pose = perception::pose_refine(feat, f, mask, 1);
      const auto extent = perception::observed_extent(perception::backproject(f, mask, 1), pose);
      const auto placement = compose::map_pose(pose, extent, asset, cfg.anchor);
      const auto out = compose::render_asset(filled, asset, placement, f.intrinsics());
      CHECK(std::equal(r.inpainted.rgb().begin(), r.inpainted.rgb().end(), filled.rgb().begin()));
      CHECK(core::bit_equal(*r.pose, pose));
      CHECK(*r.placement == placement);
      CHECK(std::equal(r.composed->rgb().begin(), r.composed->rgb().end(), out.frame.rgb().begin()));
    }
  }
}

TEST_CASE("gating on a static scene") {
  const auto seq = scenegen::generate_sequence(small_scene(12));
  SessionConfig gated;
  SessionConfig ungated;
  ungated.gating.frame_passer_enabled = false;
  ungated.gating.early_stop_enabled = false;
  const auto g = end_to_end_once(seq, gated);
  const auto u = end_to_end_once(seq, ungated);
  const auto region = gating::predict_region(seq.gt_masks[0], 1, gated.gating.region_dilation_px);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto& a = g.results[i];
    const auto& b = u.results[i];
    for (std::uint32_t y = 0; y < seq.frames[i].height(); ++y) {
      for (std::uint32_t x = 0; x < seq.frames[i].width(); ++x) {
        if (!region.contains(int(x), int(y))) CHECK(a.inpainted.pixel(x, y) == b.inpainted.pixel(x, y));
      }
    }
    if (i >= 1) {
      CHECK(a.flags.early_stop_reuse);
      CHECK(core::bit_equal(*a.pose, *g.results[i - 1].pose));
    }
  }
  CHECK(g.report["reuse_rate"].get<double>() == doctest::Approx(11.0 / 12.0));
  CHECK(g.report["bypass_rate"].get<double>() == doctest::Approx(11.0 / 12.0));
}

TEST_CASE("end_to_end_once structure") {
  scenegen::SequenceBundle empty;
  const auto none = end_to_end_once(empty, SessionConfig{});
  CHECK(none.results.empty());
  CHECK(none.report["frames"] == 0);

  auto scene = small_scene(31);
  core::Pose6D a = scenegen::default_object_pose(), b = a;
  b.t.x = 0.3f;
  scene.trajectory = scenegen::LinearTrajectory{a, b};
  const auto seq = scenegen::generate_sequence(scene);
  const auto run = end_to_end_once(seq, SessionConfig{});
  REQUIRE(run.results.size() == 31);
  for (std::size_t i = 0; i < 31; ++i) CHECK(run.results[i].frame_id == i);
  CHECK(run.report["frames"] == 31);
  CHECK(run.report["stage_us"].contains("segment"));
  CHECK(run.report["total_us"].contains("p99"));
}

TEST_CASE("timings and flags are consistent") {
  for (const auto& scene : scene_variety()) {
    const auto seq = scenegen::generate_sequence(scene);
    for (int variant = 0; variant < 4; ++variant) {
      SessionConfig cfg;
      cfg.gating.frame_passer_enabled = variant & 1;
      cfg.gating.early_stop_enabled = variant & 2;
      cfg.compose_location = variant == 3 ? ComposeLocation::kClient : ComposeLocation::kServer;
      for (const auto& r : end_to_end_once(seq, cfg).results) {
        const auto total = r.timings.get(Stage::kTotal);
        REQUIRE(total.has_value());
        for (std::size_t s = 0; s < core::kStageCount; ++s) {
          if (auto v = r.timings.get(Stage(s))) CHECK(*v <= *total);
        }
        CHECK(r.timings.has(Stage::kGate2d) == cfg.gating.frame_passer_enabled);
        if (r.flags.frame_passer_bypass) {
          CHECK_FALSE(r.timings.has(Stage::kSegment));
          CHECK_FALSE(r.timings.has(Stage::kInpaint));
        } else {
          CHECK(r.timings.has(Stage::kSegment));
        }
        CHECK(r.timings.has(Stage::kPoseRefine) == (!r.flags.early_stop_reuse && !r.flags.no_target));
        if (r.flags.early_stop_reuse) CHECK(r.pose.has_value());
        CHECK(r.composed.has_value() == (cfg.compose_location == ComposeLocation::kServer));
        CHECK_FALSE(r.timings.has(Stage::kTransportUp));
      }
    }
  }
}

TEST_CASE("control actions") {
  Session s(SessionConfig{}, nullptr);
  CHECK_ERROR_CODE(s.select_object(3, 3), ErrorCode::kNoInstanceAtPoint);
  const auto r0 = s.process_frame(two_block_frame(0));
  REQUIRE(r0.mask.has_value());
  CHECK(r0.mask->at(6, 6) == 1);
  CHECK(r0.mask->at(41, 31) == 0);

  s.apply_control({{"action", "select_object"}, {"u", 45}, {"v", 35}});
  CHECK(s.config().target.instance_id == 2);
  const auto r1 = s.process_frame(two_block_frame(1));
  CHECK_FALSE(r1.flags.no_target);
  CHECK(r1.mask->at(41, 31) == 1);
  CHECK(r1.mask->at(6, 6) == 0);

  CHECK_ERROR_CODE(s.apply_control({{"action", "select_object"}, {"u", 0}, {"v", 0}}), ErrorCode::kNoInstanceAtPoint);
  CHECK(s.config().target.instance_id == 2);

  CHECK_ERROR_CODE(s.apply_control({{"action", "set_asset"}, {"asset_id", "dragon"}}), ErrorCode::kUnknownAsset);
  s.apply_control({{"action", "set_asset"}, {"asset_id", "pyramid"}});
  CHECK(s.config().asset_id == "pyramid");

  s.apply_control({{"action", "set_anchor"}, {"mode", "fixed_scale"}, {"scale", 0.05}});
  const auto r2 = s.process_frame(two_block_frame(2));
  CHECK(r2.placement->scale == 0.05f);
  CHECK_ERROR_CODE(s.apply_control({{"action", "set_anchor"}, {"mode", "fixed_scale"}, {"scale", -1}}),
                   ErrorCode::kInvalidConfig);

  s.apply_control({{"action", "set_gating"}, {"frame_passer", false}, {"early_stop", false}});
  CHECK_FALSE(s.config().gating.frame_passer_enabled);
  const auto r3 = s.process_frame(two_block_frame(3));
  CHECK_FALSE(r3.flags.frame_passer_bypass);
  CHECK_FALSE(r3.timings.has(Stage::kGate3d));

  CHECK_ERROR_CODE(s.apply_control({{"action", "explode"}}), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(s.apply_control({{"u", 1}}), ErrorCode::kInvalidConfig);
  CHECK_ERROR_CODE(s.apply_control({{"action", "select_object"}, {"u", "x"}}), ErrorCode::kInvalidConfig);
}

TEST_CASE("scheduler examples") {
  auto frame = [](std::uint64_t id) { return testing::solid_frame(2, 2, {0, 0, 0}, id); };
  Scheduler one(1);
  CHECK(one.submit(frame(1)).accepted);
  const auto out = one.submit(frame(2));
  CHECK(out.accepted);
  REQUIRE(out.dropped_id.has_value());
  CHECK(*out.dropped_id == 1);
  core::Frame f;
  REQUIRE(one.try_take(f));
  CHECK(f.frame_id() == 2);
  CHECK_FALSE(one.try_take(f));

  Scheduler single(2);
  const auto o = single.submit(frame(9));
  CHECK(o.accepted);
  CHECK_FALSE(o.dropped_id.has_value());
  CHECK_ERROR_CODE(Scheduler(0), ErrorCode::kInvalidConfig);
}

TEST_CASE("scheduler bookkeeping under random schedules") {
  core::Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    Scheduler s(std::size_t(core::uniform_int(rng, 1, 4)));
    std::uint64_t next_id = 0, last_taken = 0;
    bool any_taken = false;
    std::set<std::uint64_t> dropped;
    for (int step = 0; step < 100; ++step) {
      if (core::uniform_int(rng, 0, 2) != 0) {
        const auto out = s.submit(testing::solid_frame(1, 1, {0, 0, 0}, next_id++));
        if (out.dropped_id) dropped.insert(*out.dropped_id);
      } else {
        core::Frame f;
        if (s.try_take(f)) {
          if (any_taken) CHECK(f.frame_id() > last_taken);
          CHECK(dropped.count(f.frame_id()) == 0);
          last_taken = f.frame_id();
          any_taken = true;
        }
      }
      const auto c = s.counters();
      CHECK(c.received == c.processed + c.dropped + c.queued);
      CHECK(c.queued <= s.capacity());
      CHECK(c.dropped == dropped.size());
    }
  }
}

TEST_CASE("scheduler with a concurrent producer and consumer") {
  Scheduler s(2);
  std::vector<std::uint64_t> taken;
  std::thread consumer([&] {
    core::Frame f;
    while (s.take(f)) {
      taken.push_back(f.frame_id());
      if (f.frame_id() % 7 == 0) std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
  });
  for (std::uint64_t i = 0; i < 2000; ++i) s.submit(testing::solid_frame(1, 1, {0, 0, 0}, i));
  s.close();
  consumer.join();
  const auto c = s.counters();
  CHECK(c.received == 2000);
  CHECK(c.processed == taken.size());
  CHECK(c.processed + c.dropped == 2000);
  CHECK(std::is_sorted(taken.begin(), taken.end()));
  CHECK(std::adjacent_find(taken.begin(), taken.end()) == taken.end());
  CHECK(taken.back() == 1999);
}

TEST_CASE("percentiles and report") {
  CHECK(percentile(std::vector<std::uint64_t>{}, 50) == 0);
  CHECK(percentile(std::vector<std::uint64_t>{5}, 99) == 5);
  CHECK(percentile(std::vector<std::uint64_t>{4, 1, 3, 2}, 50) == 2);
  CHECK(percentile(std::vector<std::uint64_t>{4, 1, 3, 2}, 75) == 3);
  CHECK(percentile(std::vector<std::uint64_t>{4, 1, 3, 2}, 99) == 4);
  std::vector<std::uint64_t> hundred(100);
  for (std::uint64_t i = 0; i < 100; ++i) hundred[i] = 100 - i;
  CHECK(percentile(hundred, 95) == 95);

  RunReportBuilder b;
  core::StageTimings t;
  t.set(Stage::kSegment, 10);
  t.set(Stage::kTotal, 30);
  b.add(ResultFlags{true, false, false, false}, t);
  b.add(ResultFlags{false, true, false, false}, t);
  b.add_dropped(2);
  const auto j = b.to_json();
  CHECK(j["frames"] == 2);
  CHECK(j["dropped"] == 2);
  CHECK(j["bypass_rate"] == 0.5);
  CHECK(j["reuse_rate"] == 0.5);
  CHECK(j["stage_us"]["segment"]["p50"] == 10);
  CHECK_FALSE(j["stage_us"].contains("inpaint"));
  CHECK(j["total_us"]["p95"] == 30);
}

TEST_CASE("results directory round trip") {
  const auto seq = scenegen::generate_sequence(small_scene(3));
  auto run = end_to_end_once(seq, SessionConfig{});
  StoredResults stored;
  stored.results = run.results;
  stored.bundle_hash = "abc";
  stored.dropped_ids = {7};
  stored.report = run.report;
  const auto dir = std::filesystem::temp_directory_path() / "drpipe_results_roundtrip";
  std::filesystem::remove_all(dir);
  write_results(dir, stored);
  const auto back = read_results(dir);
  CHECK(back.bundle_hash == stored.bundle_hash);
  CHECK(back.dropped_ids == stored.dropped_ids);
  CHECK(back.report == stored.report);
  REQUIRE(back.results.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& a = stored.results[i];
    const auto& b = back.results[i];
    CHECK(b.flags == a.flags);
    CHECK(b.timings == a.timings);
    CHECK(core::bit_equal(*b.pose, *a.pose));
    CHECK(b.placement == a.placement);
    CHECK(std::equal(b.inpainted.rgb().begin(), b.inpainted.rgb().end(), a.inpainted.rgb().begin()));
    CHECK(std::equal(b.composed->rgb().begin(), b.composed->rgb().end(), a.composed->rgb().begin()));
    CHECK(b.mask == a.mask);
    CHECK(b.silhouette == a.silhouette);
  }
  CHECK_ERROR_CODE(read_results(dir / "missing"), ErrorCode::kManifestSchema);
}

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "semgraph/error.hpp"
#include "semgraph/io.hpp"
#include "semgraph/sim.hpp"
#include "test_util.hpp"

using namespace semgraph;

namespace {

const nlohmann::json kLab = nlohmann::json::parse(R"({"rooms":[{"id":"lab","name":"Lab",
    "polygon":[[-20,-20],[20,-20],[20,20],[-20,20]]}],"connections":[]})");

SceneSpec axis_scene(double z, double radius) {
  SceneSpec s;
  s.rooms = kLab;
  s.intrinsics = {500.0, 500.0, 319.5, 239.5, 640, 480};
  s.objects.push_back({"ball", "ball", {0, 0, z}, radius, std::nullopt});
  s.trajectory.push_back(Pose::identity());
  return s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

TEST_CASE("look_at") {
  const Pose p = look_at({0, 0, 0}, {1, 0, 0});
  CHECK((p.rotation() * Eigen::Vector3d::UnitZ() - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
  CHECK((p.rotation() * Eigen::Vector3d::UnitX() - Eigen::Vector3d(0, -1, 0)).norm() < 1e-12);
  CHECK((p.rotation() * Eigen::Vector3d::UnitY() - Eigen::Vector3d(0, 0, -1)).norm() < 1e-12);
  CHECK_THROWS_AS(look_at({0, 0, 0}, {0, 0, 1}), Error);
}

TEST_CASE("an on-axis sphere renders as a centred disk") {
  Rng rng(1);
  const FrameInput f = render_frame(axis_scene(2.0, 0.1), 0, rng);
  REQUIRE(f.detections.size() == 1);
  const Mask& m = f.detections[0].mask;
  const double r_px = 500.0 * 0.1 / 2.0;
  CHECK(static_cast<double>(m.area()) == doctest::Approx(M_PI * r_px * r_px).epsilon(0.05));
  double su = 0, sv = 0, far = 0;
  m.for_each_pixel([&](int x, int y) {
    su += x;
    sv += y;
    far = std::max(far, std::hypot(x - 319.5, y - 239.5));
  });
  CHECK(su / m.area() == doctest::Approx(319.5).epsilon(1e-3));
  CHECK(sv / m.area() == doctest::Approx(239.5).epsilon(1e-3));
  CHECK(far == doctest::Approx(r_px).epsilon(0.05));
  CHECK(f.frame_id == 0);
  CHECK(f.depth.at(319, 239) == 1900);  // front surface at z - r
}

TEST_CASE("objects behind the camera or removed are not rendered") {
  SceneSpec s = axis_scene(-2.0, 0.1);
  Rng rng(2);
  CHECK(render_frame(s, 0, rng).detections.empty());
  CHECK_FALSE(object_visible(s, 0, 0));

  s = axis_scene(2.0, 0.1);
  s.trajectory.assign(3, Pose::identity());
  s.objects[0].removed_at = 1;
  CHECK(render_frame(s, 0, rng).detections.size() == 1);
  CHECK(render_frame(s, 1, rng).detections.empty());
  const GroundTruth t = ground_truth(s);
  CHECK(t.frames.at(0).size() == 1);
  CHECK(t.frames.at(2).empty());

  CHECK(code_of([&] { render_frame(s, 3, rng); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("noise-free centroids agree with the true positions") {
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> ux(-0.8, 0.8), uz(1.0, 4.0), ur(0.03, 0.2);
  for (int trial = 0; trial < 40; ++trial) {
    SceneSpec s = axis_scene(2.0, 0.1);
    s.objects.clear();
    for (int i = 0; i < 3; ++i) {
      const double z = uz(rng);
      s.objects.push_back({"o" + std::to_string(i), "o" + std::to_string(i),
                           {ux(rng) * z * 0.5, ux(rng) * z * 0.4, z}, ur(rng), std::nullopt});
    }
    s.trajectory = {oracle::random_pose(rng, 2.0)};
    for (auto& o : s.objects) o.position = s.trajectory[0].apply(o.position);

    s.depth_model = DepthModel::Center;
    Rng r(7);
    const FrameInput f = render_frame(s, 0, r);
    for (const auto& d : f.detections) {
      // Occluded objects have partial masks; only compare unoccluded ones.
      std::size_t idx = 0;
      while (s.objects[idx].label != d.label) ++idx;
      Point3 c = centroid3d(d.mask, f.depth, s.intrinsics, f.camera_pose);
      bool occluded = false;
      for (std::size_t j = 0; j < s.objects.size(); ++j) {
        if (j == idx) continue;
        for (const auto& d2 : f.detections)
          if (d2.label == s.objects[j].label) {
            const Eigen::Vector3d a = map_to_camera({s.objects[idx].position, Frame::Map}, f.camera_pose).p;
            const Eigen::Vector3d b = map_to_camera({s.objects[j].position, Frame::Map}, f.camera_pose).p;
            const double ang = std::acos(a.normalized().dot(b.normalized()));
            if (ang < std::asin(std::min(1.0, s.objects[idx].radius / a.norm())) +
                          std::asin(std::min(1.0, s.objects[j].radius / b.norm())) + 0.01)
              occluded = true;
          }
      }
      const Eigen::Vector3d cam = map_to_camera({s.objects[idx].position, Frame::Map}, f.camera_pose).p;
      const PixelCoord uv = project({cam, Frame::Camera}, s.intrinsics);
      const double rpx = s.intrinsics.fx * s.objects[idx].radius / cam.z();
      const bool clipped = uv.u - rpx < 1 || uv.v - rpx < 1 || uv.u + rpx > 638 || uv.v + rpx > 478;
      if (occluded || clipped) continue;
      REQUIRE((c.p - s.objects[idx].position).norm() < 0.01);
    }
  }
}

TEST_CASE("surface depth pulls the centroid towards the camera by about 2r/3") {
  SceneSpec s = axis_scene(2.0, 0.15);
  Rng rng(3);
  const FrameInput f = render_frame(s, 0, rng);
  const Point3 c = centroid3d(f.detections[0].mask, f.depth, s.intrinsics, f.camera_pose);
  CHECK(std::abs(c.x()) < 1e-3);
  CHECK(std::abs(c.y()) < 1e-3);
  CHECK(c.z() == doctest::Approx(2.0 - 2.0 * 0.15 / 3.0).epsilon(0.003));
}

TEST_CASE("depth jitter moves only the depth") {
  SceneSpec s = axis_scene(2.0, 0.1);
  s.noise.centroid_jitter_std = {0, 0, 0.3};
  const FrameInput a = render_frame(s, 0, std::uint64_t{1});
  const FrameInput b = render_frame(s, 0, std::uint64_t{2});
  CHECK(a.detections[0].mask == b.detections[0].mask);
  CHECK(a.depth != b.depth);
}

TEST_CASE("mask noise keeps masks close to the silhouette") {
  SceneSpec s = axis_scene(2.0, 0.1);
  const FrameInput clean = render_frame(s, 0, std::uint64_t{1});
  s.noise.mask_dropout = 0.3;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FrameInput noisy = render_frame(s, 0, seed);
    REQUIRE(noisy.detections.size() == 1);
    const double v = iou(noisy.detections[0].mask, clean.detections[0].mask);
    CHECK(v > 0.7);
    CHECK(v < 1.0);
  }
}

TEST_CASE("false negatives, false positives and relations") {
  SceneSpec s = axis_scene(2.0, 0.1);
  s.objects.push_back({"table", "table", {0.3, 0.2, 2.5}, 0.2, std::nullopt});
  s.relations.push_back({"ball", "table", "on", 0.8});
  s.relations.push_back({"table", "ghost", "near", 0.8});
  Rng rng(5);
  FrameInput f = render_frame(s, 0, rng);
  REQUIRE(f.detections.size() == 2);
  REQUIRE(f.relations.size() == 1);
  CHECK(f.relations[0].subject == 0);
  CHECK(f.relations[0].object == 1);
  CHECK(f.relations[0].probability == 0.8);

  s.noise.relation_jitter = 0.5;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const auto& r : render_frame(s, 0, seed).relations) {
      CHECK(r.probability >= 0.0);
      CHECK(r.probability <= 1.0);
    }
  }

  s.noise.false_negative_rate = 1.0;
  CHECK(render_frame(s, 0, rng).detections.empty());
  s.noise.false_negative_rate = 0.0;
  s.noise.false_positive_rate = 1.0;
  int clutter = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FrameInput g = render_frame(s, 0, seed);
    for (const auto& d : g.detections) {
      if (d.label != "clutter") continue;
      ++clutter;
      d.mask.for_each_pixel([&](int x, int y) { REQUIRE(g.depth.at(x, y) > 0); });
    }
  }
  CHECK(clutter >= 18);
}

TEST_CASE("scene spec parsing and validation") {
  const SceneSpec s = load_scene_spec(test_data("small_scene.json"));
  CHECK(s.objects.size() == 3);
  CHECK(s.trajectory.size() == 30);
  CHECK(s.relations.size() == 2);
  const SceneSpec back = scene_spec_from_json(scene_spec_to_json(s));
  nlohmann::json jb = scene_spec_to_json(back), js = scene_spec_to_json(s);
  REQUIRE(back.trajectory.size() == s.trajectory.size());
  for (std::size_t i = 0; i < s.trajectory.size(); ++i) {
    CHECK(translation_distance(back.trajectory[i], s.trajectory[i]) < 1e-12);
    CHECK(rotation_angle(back.trajectory[i], s.trajectory[i]) < 1e-7);
  }
  jb.erase("trajectory");
  js.erase("trajectory");
  CHECK(jb == js);

  nlohmann::json j = scene_spec_to_json(s);
  j["objects"][0]["radius"] = 0.0;
  CHECK(code_of([&] { scene_spec_from_json(j); }) == ErrorCode::InvalidConfig);
  j = scene_spec_to_json(s);
  j["noise"]["mask_dropout"] = 1.5;
  CHECK(code_of([&] { scene_spec_from_json(j); }) == ErrorCode::InvalidConfig);
  j = scene_spec_to_json(s);
  j["trajectory"] = nlohmann::json::array();
  CHECK(code_of([&] { scene_spec_from_json(j); }) == ErrorCode::InvalidConfig);
  j = scene_spec_to_json(s);
  j["objects"][1]["name"] = "bottle1";
  CHECK(code_of([&] { scene_spec_from_json(j); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("generate_log is a pure function of spec and seed") {
  const SceneSpec s = load_scene_spec(test_data("small_scene.json"));
  const auto a = scratch_dir("gen-a"), b = scratch_dir("gen-b"), c = scratch_dir("gen-c");
  generate_log(s, 42, a);
  generate_log(s, 42, b);
  generate_log(s, 43, c);

  const std::string la = read_file(a / "frames.jsonl");
  CHECK(std::count(la.begin(), la.end(), '\n') == 30);
  std::size_t pgms = 0;
  for (const auto& e : std::filesystem::directory_iterator(a / "depth")) pgms += e.is_regular_file();
  CHECK(pgms == 30);
  CHECK(la == read_file(b / "frames.jsonl"));
  CHECK(la != read_file(c / "frames.jsonl"));
  std::uint64_t h = fnv1a(la);
  for (int i = 0; i < 30; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "depth/%06d.pgm", i);
    const std::string da = read_file(a / name);
    CHECK(da == read_file(b / name));
    h = fnv1a(da, h);
  }
  h = fnv1a(read_file(a / "truth.json"), h);
  CHECK(matches_golden("small_scene_seed42.fnv", std::to_string(h) + "\n"));

  const GroundTruth t = truth_from_json(nlohmann::json::parse(read_file(a / "truth.json")));
  CHECK(t.frames.size() == 30);
  CHECK(t.labels.at("bottle1") == "bottle");
  CHECK(load_rooms(a / "rooms.json").rooms().size() == 4);
  for (const auto& d : {a, b, c}) std::filesystem::remove_all(d);
}

TEST_CASE("evaluate") {
  GroundTruth truth;
  truth.labels = {{"bottle", "bottle"}};
  truth.frames[0]["bottle"] = {{0.67, 0.10, 0.95}, true};
  FrameEstimates est;
  est[0] = {{1, "bottle", {0.74, -0.08, 0.93}}};
  EvalReport r = evaluate(est, truth);
  CHECK(r.samples == 1);
  CHECK(r.mae.x() == doctest::Approx(0.07));
  CHECK(r.mae.y() == doctest::Approx(0.18));
  CHECK(r.mae.z() == doctest::Approx(0.02));
  CHECK(r.error_std.norm() == 0.0);

  est[0] = {{1, "bottle", {0.67, 0.10, 0.95}}};
  r = evaluate(est, truth);
  CHECK(r.mae.norm() == 0.0);
  CHECK(r.error_std.norm() == 0.0);

  CHECK(code_of([&] { evaluate(FrameEstimates{}, truth); }) == ErrorCode::NoSamples);
  FrameEstimates wrong;
  wrong[0] = {{1, "cup", {0, 0, 0}}};
  CHECK(code_of([&] { evaluate(wrong, truth); }) == ErrorCode::NoSamples);

  // 30 random samples against a spreadsheet-style recomputation.
  std::mt19937_64 rng(97);
  std::normal_distribution<double> g(0, 0.3);
  GroundTruth t30;
  t30.labels = {{"b", "bottle"}};
  FrameEstimates e30;
  std::vector<double> ex, ey, ez, px;
  const Eigen::Vector3d tp(0.67, 0.10, 0.95);
  for (int f = 0; f < 30; ++f) {
    t30.frames[f]["b"] = {tp, true};
    const Eigen::Vector3d p = tp + Eigen::Vector3d(g(rng), g(rng), g(rng));
    e30[f] = {{1, "bottle", p}};
    ex.push_back(p.x() - tp.x());
    ey.push_back(p.y() - tp.y());
    ez.push_back(p.z() - tp.z());
    px.push_back(p.x());
  }
  r = evaluate(e30, t30);
  CHECK(r.samples == 30);
  auto mabs = [](std::vector<double> v) {
    for (double& x : v) x = std::abs(x);
    return oracle::mean(v);
  };
  CHECK(r.mae.x() == doctest::Approx(mabs(ex)));
  CHECK(r.mae.y() == doctest::Approx(mabs(ey)));
  CHECK(r.mae.z() == doctest::Approx(mabs(ez)));
  CHECK(r.error_std.x() == doctest::Approx(oracle::pop_std(ex)));
  CHECK(r.error_std.y() == doctest::Approx(oracle::pop_std(ey)));
  CHECK(r.error_std.z() == doctest::Approx(oracle::pop_std(ez)));
  CHECK(r.mean_position.x() == doctest::Approx(oracle::mean(px)));

  // Permuting which frame holds which sample changes nothing.
  FrameEstimates shuffled;
  std::vector<int> order(30);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int f = 0; f < 30; ++f) shuffled[f] = e30[order[f]];
  const EvalReport rs = evaluate(shuffled, t30);
  CHECK((rs.mae - r.mae).norm() < 1e-12);
  CHECK((rs.error_std - r.error_std).norm() < 1e-12);
}

TEST_CASE("evaluate counts duplicates and misses") {
  GroundTruth t;
  t.labels = {{"b1", "bottle"}, {"b2", "bottle"}, {"c", "cup"}, {"hidden", "cup"}};
  t.frames[0] = {{"b1", {{0, 0, 0}, true}},
                 {"b2", {{1, 0, 0}, true}},
                 {"c", {{0, 1, 0}, true}},
                 {"hidden", {{5, 5, 0}, false}}};
  FrameEstimates e;
  e[0] = {{1, "bottle", {0.1, 0, 0}}, {2, "bottle", {0.05, 0, 0}}, {3, "bottle", {0.9, 0, 0}}};
  const EvalReport r = evaluate(e, t);
  CHECK(r.samples == 2);
  CHECK(r.duplicates == 1);
  CHECK(r.missed == 1);  // the cup; the never-visible one is not counted
  CHECK(r.mae.x() == doctest::Approx(0.075));
}

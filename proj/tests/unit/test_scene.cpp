#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>

#include "lantern/metrics.hpp"
#include "lantern/scene.hpp"
#include "support/test_helpers.hpp"

using namespace lantern;
namespace lt = lantern::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), {});
}

bool trees_identical(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
  std::sort(rel.begin(), rel.end());
  for (const auto& r : rel) {
    if (!fs::exists(b / r)) return false;
    if (slurp(a / r) != slurp(b / r)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("analytic_field: dominant Gaussian, decay bound, midpoint mix") {
  SceneSpec spec;
  spec.control_points = 2;
  spec.gauss_width = 0.02;
  spec.amplitude = 10.0;
  spec.colors = {{1, 0, 0}, {0, 1, 0}};
  LandmarkFrame lm;
  lm.points = {{0.3, 0.5, 0.5}, {0.7, 0.5, 0.5}};  // 0.4 apart = 20 s

  double sigma, rgb[3];
  // At a control point with the other >= 10 s away.
  analytic_field(lm.points[0].data(), lm, spec, sigma, rgb);
  CHECK(sigma == doctest::Approx(spec.amplitude).epsilon(1e-9));
  CHECK(rgb[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rgb[1] == doctest::Approx(0.0).epsilon(1e-9));

  // Far from every point: bounded mass, background color.
  const double far[3] = {0.5, 0.95, 0.95};
  analytic_field(far, lm, spec, sigma, rgb);
  CHECK(sigma <= spec.amplitude * 2 * std::exp(-50.0));
  CHECK(rgb[0] == doctest::Approx(spec.background[0]));

  // Midpoint of two nearby points: equal weights mix the colors evenly.
  lm.points = {{0.46, 0.5, 0.5}, {0.54, 0.5, 0.5}};  // 2 s from the midpoint
  const double mid[3] = {0.5, 0.5, 0.5};
  analytic_field(mid, lm, spec, sigma, rgb);
  CHECK(rgb[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rgb[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gen_landmark_configs: box containment, walk continuity, split") {
  const SceneSpec spec = lt::tiny_scene_spec();
  const auto configs = gen_landmark_configs(spec, 42);
  REQUIRE(static_cast<int>(configs.frames.size()) ==
          spec.train_configs + spec.holdout_configs);
  int holdouts = 0;
  for (std::size_t c = 0; c < configs.frames.size(); ++c) {
    if (configs.holdout[c]) ++holdouts;
    for (const auto& p : configs.frames[c].points)
      for (int k = 0; k < 3; ++k) {
        CHECK(p[k] >= spec.box_lo[k]);
        CHECK(p[k] <= spec.box_hi[k]);
      }
  }
  CHECK(holdouts == spec.holdout_configs);
  // Deterministic in the seed.
  const auto again = gen_landmark_configs(spec, 42);
  for (std::size_t c = 0; c < configs.frames.size(); ++c)
    CHECK(again.frames[c].points == configs.frames[c].points);
  const auto other = gen_landmark_configs(spec, 43);
  CHECK(other.frames[0].points != configs.frames[0].points);
}

TEST_CASE("gen_dataset: counts, round trip, byte-identical regeneration") {
  SceneSpec spec = lt::tiny_scene_spec();
  spec.train_configs = 2;
  spec.holdout_configs = 0;
  spec.camera_count = 3;
  spec.image_size = 16;
  spec.gt_samples = 32;

  const auto dir_a = lt::fresh_temp_dir("ds_a");
  const auto dir_b = lt::fresh_temp_dir("ds_b");
  const Dataset ds = gen_dataset(spec, 7, dir_a.string());
  CHECK(ds.frames.size() == 6);  // 2 configs x 3 cameras

  const Dataset loaded = load_dataset(dir_a.string());
  CHECK(loaded.frames.size() == 6);
  CHECK(loaded.image_size == 16);
  CHECK(loaded.cameras.size() == 3);
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    CHECK(loaded.frames[i].landmarks.points == ds.frames[i].landmarks.points);
    CHECK(loaded.frames[i].split == ds.frames[i].split);
  }

  gen_dataset(spec, 7, dir_b.string());
  CHECK(trees_identical(dir_a, dir_b));

  // The landmark text records agree with the manifest.
  const auto recs =
      read_landmark_records((dir_a / "landmarks.txt").string(),
                            spec.control_points);
  REQUIRE(recs.size() == ds.frames.size());
  for (std::size_t i = 0; i < recs.size(); ++i)
    CHECK(recs[i].points == ds.frames[i].landmarks.points);

  // Raw float images round-trip exactly against the in-memory render.
  const Image img = load_frame_image(loaded, loaded.frames[0]);
  CHECK(img.width == 16);
  CHECK(img.channels == 3);
}

TEST_CASE("gen_dataset: empty-density scene renders pure background") {
  SceneSpec spec = lt::tiny_scene_spec();
  spec.amplitude = 1e-12;
  spec.train_configs = 1;
  spec.holdout_configs = 0;
  spec.camera_count = 1;
  spec.image_size = 12;
  spec.gt_samples = 32;
  const auto dir = lt::fresh_temp_dir("ds_empty");
  const Dataset ds = gen_dataset(spec, 5, dir.string());
  const Image img = load_frame_image(ds, ds.frames[0]);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(img.at(x, y, c) ==
              doctest::Approx(spec.background[c]).epsilon(1e-6));
}

TEST_CASE("load_dataset: missing files and tampered manifests are named") {
  SceneSpec spec = lt::tiny_scene_spec();
  spec.train_configs = 1;
  spec.holdout_configs = 0;
  spec.camera_count = 1;
  spec.image_size = 12;
  spec.gt_samples = 32;
  const auto dir = lt::fresh_temp_dir("ds_bad");
  gen_dataset(spec, 9, dir.string());

  SUBCASE("missing image file") {
    fs::remove(dir / "images" / "f00000.raw");
    try {
      load_dataset(dir.string());
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("f00000.raw") != std::string::npos);
    }
  }
  SUBCASE("inconsistent landmark count") {
    auto manifest = slurp(dir / "manifest.json");
    // Duplicate the frame with one landmark dropped.
    const auto pos = manifest.find("\"frames\"");
    REQUIRE(pos != std::string::npos);
    nlohmann::json j = nlohmann::json::parse(manifest);
    nlohmann::json frame2 = j["frames"][0];
    frame2["id"] = 1;
    frame2["landmarks"].erase(0);
    j["frames"].push_back(frame2);
    std::ofstream os(dir / "manifest.json", std::ios::trunc);
    os << j.dump(2);
    os.close();
    try {
      load_dataset(dir.string());
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("inconsistent landmark count") !=
            std::string::npos);
    }
  }
  SUBCASE("corrupt json") {
    std::ofstream os(dir / "manifest.json", std::ios::trunc);
    os << "{ not json";
    os.close();
    CHECK_THROWS_AS(load_dataset(dir.string()), ValidationError);
  }
}

TEST_CASE("psnr: cap, closed form, brute-force oracle") {
  Image a(8, 8, 3), b(8, 8, 3);
  Pcg32 rng(12, 3);
  for (auto& v : a.data) v = rng.next_double();
  b = a;
  CHECK(psnr(a, b) == 99.0);

  for (auto& v : b.data) v = 0.0;
  for (auto& v : a.data) v = 0.1;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));

  for (auto& v : a.data) v = rng.next_double();
  for (auto& v : b.data) v = rng.next_double();
  double mse = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= a.data.size();
  CHECK(psnr(a, b) ==
        doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-9));

  Image c(4, 4, 3);
  CHECK_THROWS_AS(psnr(a, c), ValidationError);
}

TEST_CASE("png writer emits decodable, deterministic files") {
  const auto dir = lt::fresh_temp_dir("png");
  Image img(9, 7, 3);
  Pcg32 rng(3, 3);
  for (auto& v : img.data) v = rng.next_double();
  const std::string p1 = (dir / "a.png").string();
  const std::string p2 = (dir / "b.png").string();
  write_png(p1, img);
  write_png(p2, img);
  const std::string b1 = slurp(p1), b2 = slurp(p2);
  CHECK(b1 == b2);
  CHECK(b1.size() > 8);
  CHECK(b1.substr(1, 3) == "PNG");
}

#include "lantern/scene.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lantern/renderer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lantern {
namespace {

const std::array<double, 3> kPalette[] = {
    {0.90, 0.15, 0.15}, {0.15, 0.80, 0.20}, {0.20, 0.35, 0.95},
    {0.95, 0.85, 0.15}, {0.85, 0.20, 0.85}, {0.15, 0.85, 0.85},
    {0.95, 0.55, 0.15}, {0.60, 0.60, 0.60},
};

std::string frame_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%05d", id);
  return buf;
}

}  // namespace

void validate_scene_spec(const SceneSpec& spec) {
  LANTERN_CHECK(spec.control_points >= 1, "scene: need >= 1 control point");
  LANTERN_CHECK(spec.gauss_width > 0, "scene: gauss_width must be > 0");
  LANTERN_CHECK(spec.amplitude > 0, "scene: amplitude must be > 0");
  LANTERN_CHECK(spec.camera_count >= 1, "scene: need >= 1 camera");
  LANTERN_CHECK(spec.camera_radius > 0.9,
                "scene: camera ring must sit outside the unit cube");
  LANTERN_CHECK(spec.image_size >= 8, "scene: image_size too small");
  LANTERN_CHECK(spec.train_configs >= 1 && spec.holdout_configs >= 0,
                "scene: configuration counts invalid");
  LANTERN_CHECK(spec.gt_samples >= 16, "scene: gt_samples too small");
  for (int k = 0; k < 3; ++k) {
    LANTERN_CHECK(spec.box_lo[k] >= 0.0 && spec.box_hi[k] <= 1.0 &&
                      spec.box_lo[k] < spec.box_hi[k],
                  "scene: control-point box must nest inside the unit cube");
    LANTERN_CHECK(spec.background[k] >= 0 && spec.background[k] <= 1,
                  "scene: background outside [0,1]");
  }
}

void analytic_field(const double x[3], const LandmarkFrame& frame,
                    const SceneSpec& spec, double& sigma, double rgb[3]) {
  const double inv2s2 = 1.0 / (2.0 * spec.gauss_width * spec.gauss_width);
  // exp(-37) ~ 8e-17: beyond this the term is numeric dust.
  const double r2_cut = 37.0 / inv2s2;
  double mass = 0;
  double col[3] = {0, 0, 0};
  for (int k = 0; k < frame.count(); ++k) {
    const auto& p = frame.points[k];
    const double dx = x[0] - p[0], dy = x[1] - p[1], dz = x[2] - p[2];
    const double r2 = dx * dx + dy * dy + dz * dz;
    if (r2 > r2_cut) continue;
    const double w = std::exp(-r2 * inv2s2);
    mass += w;
    const auto& c = spec.colors.empty()
                        ? kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))]
                        : spec.colors[k % spec.colors.size()];
    for (int j = 0; j < 3; ++j) col[j] += w * c[j];
  }
  sigma = spec.amplitude * mass;
  if (mass < 1e-12) {
    for (int j = 0; j < 3; ++j) rgb[j] = spec.background[j];
  } else {
    for (int j = 0; j < 3; ++j) rgb[j] = col[j] / mass;
  }
}

void AnalyticFieldEval::eval(const double* pts, const double* /*dirs*/,
                             std::size_t count, double* sigma,
                             double* rgb) const {
  for (std::size_t i = 0; i < count; ++i)
    analytic_field(pts + i * 3, *frame_, *spec_, sigma[i], rgb + i * 3);
}

void AnalyticFieldEval::eval_sigma(const double* pts, std::size_t count,
                                   double* sigma) const {
  double rgb[3];
  for (std::size_t i = 0; i < count; ++i)
    analytic_field(pts + i * 3, *frame_, *spec_, sigma[i], rgb);
}

std::vector<Camera> make_camera_ring(const SceneSpec& spec) {
  std::vector<Camera> cams;
  const std::array<double, 3> center = {0.5, 0.5, 0.5};
  const double fx = spec.image_size;  // ~53 degree field of view
  for (int i = 0; i < spec.camera_count; ++i) {
    const double theta = 2.0 * M_PI * i / spec.camera_count;
    const double horiz = spec.camera_radius * std::cos(spec.camera_elevation);
    const std::array<double, 3> eye = {
        center[0] + horiz * std::cos(theta),
        center[1] + horiz * std::sin(theta),
        center[2] + spec.camera_radius * std::sin(spec.camera_elevation)};
    cams.push_back(make_look_at_camera(eye, center, fx, fx, spec.image_size,
                                       spec.image_size));
  }
  return cams;
}

LandmarkConfigs gen_landmark_configs(const SceneSpec& spec,
                                     std::uint64_t seed) {
  const int total = spec.train_configs + spec.holdout_configs;
  Pcg32 rng(seed, rng_stream(0x6c616e64ULL));
  LandmarkConfigs out;
  out.frames.resize(total);
  out.holdout.assign(total, false);
  for (int j = 0; j < spec.holdout_configs; ++j) {
    const int idx = static_cast<int>((j + 0.5) * total / spec.holdout_configs);
    out.holdout[std::min(idx, total - 1)] = true;
  }

  std::vector<std::array<double, 3>> pts(spec.control_points);
  for (auto& p : pts)
    for (int k = 0; k < 3; ++k)
      p[k] = rng.uniform(spec.box_lo[k], spec.box_hi[k]);
  for (int c = 0; c < total; ++c) {
    if (c > 0) {
      for (auto& p : pts)
        for (int k = 0; k < 3; ++k) {
          double v = p[k] + rng.uniform(-spec.walk_step, spec.walk_step);
          // Reflect into the margin box.
          if (v < spec.box_lo[k]) v = 2 * spec.box_lo[k] - v;
          if (v > spec.box_hi[k]) v = 2 * spec.box_hi[k] - v;
          v = std::min(std::max(v, spec.box_lo[k]), spec.box_hi[k]);
          p[k] = v;
        }
    }
    out.frames[c].frame_index = c;
    out.frames[c].points = pts;
  }
  return out;
}

std::vector<std::size_t> Dataset::split_indices(const std::string& split) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (frames[i].split == split) idx.push_back(i);
  return idx;
}

namespace {

json camera_to_json(const Camera& cam, int id) {
  json j;
  j["id"] = id;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["rotation"] = cam.rotation;
  j["translation"] = cam.translation;
  j["width"] = cam.width;
  j["height"] = cam.height;
  return j;
}

Camera camera_from_json(const json& j) {
  Camera cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  const auto rot = j.at("rotation").get<std::vector<double>>();
  const auto tr = j.at("translation").get<std::vector<double>>();
  LANTERN_CHECK(rot.size() == 9 && tr.size() == 3,
                "manifest: malformed camera pose");
  std::copy(rot.begin(), rot.end(), cam.rotation.begin());
  std::copy(tr.begin(), tr.end(), cam.translation.begin());
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  validate_camera(cam);
  return cam;
}

}  // namespace

Dataset gen_dataset(const SceneSpec& spec, std::uint64_t seed,
                    const std::string& out_dir) {
  validate_scene_spec(spec);
  fs::create_directories(fs::path(out_dir) / "images");

  Dataset ds;
  ds.format_version = kManifestVersion;
  ds.image_size = spec.image_size;
  ds.background = spec.background;
  ds.cameras = make_camera_ring(spec);
  ds.root = out_dir;

  const LandmarkConfigs configs = gen_landmark_configs(spec, seed);
  int frame_id = 0;
  for (std::size_t c = 0; c < configs.frames.size(); ++c) {
    const AnalyticFieldEval field(spec, configs.frames[c]);
    for (std::size_t cam = 0; cam < ds.cameras.size(); ++cam) {
      FrameRecord rec;
      rec.id = frame_id;
      rec.camera_id = static_cast<int>(cam);
      rec.config_id = static_cast<int>(c);
      rec.split = configs.holdout[c] ? "holdout" : "train";
      rec.landmarks = configs.frames[c];
      rec.landmarks.frame_index = frame_id;
      rec.png_path = "images/" + frame_name(frame_id) + ".png";
      rec.raw_path = "images/" + frame_name(frame_id) + ".raw";

      const Image img = render_image(
          ds.cameras[cam], field, nullptr, spec.gt_samples,
          spec.background.data(), rng_stream(0x676e6474ULL, seed, frame_id));
      write_png((fs::path(out_dir) / rec.png_path).string(), img);
      write_float_image((fs::path(out_dir) / rec.raw_path).string(), img);
      ds.frames.push_back(std::move(rec));
      ++frame_id;
    }
  }

  json manifest;
  manifest["format_version"] = ds.format_version;
  manifest["image_size"] = ds.image_size;
  manifest["background"] = ds.background;
  manifest["cameras"] = json::array();
  for (std::size_t i = 0; i < ds.cameras.size(); ++i)
    manifest["cameras"].push_back(camera_to_json(ds.cameras[i], int(i)));
  manifest["frames"] = json::array();
  for (const auto& f : ds.frames) {
    json jf;
    jf["id"] = f.id;
    jf["camera"] = f.camera_id;
    jf["config"] = f.config_id;
    jf["split"] = f.split;
    json lms = json::array();
    for (const auto& p : f.landmarks.points) lms.push_back(p);
    jf["landmarks"] = lms;
    jf["png"] = f.png_path;
    jf["raw"] = f.raw_path;
    manifest["frames"].push_back(jf);
  }
  std::ofstream os(fs::path(out_dir) / "manifest.json", std::ios::trunc);
  if (!os) throw EngineError(cat("cannot write manifest in ", out_dir));
  os << manifest.dump(2) << '\n';
  os.flush();
  if (!os) throw EngineError(cat("manifest write failed in ", out_dir));

  std::vector<LandmarkFrame> lm_frames;
  lm_frames.reserve(ds.frames.size());
  for (const auto& f : ds.frames) lm_frames.push_back(f.landmarks);
  write_landmark_records((fs::path(out_dir) / "landmarks.txt").string(),
                         lm_frames);
  return ds;
}

Dataset load_dataset(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream is(manifest_path);
  if (!is)
    throw ValidationError(cat("dataset manifest not found: ",
                              manifest_path.string()));
  json manifest;
  try {
    is >> manifest;
  } catch (const json::exception& e) {
    throw ValidationError(cat("manifest '", manifest_path.string(),
                              "' is not valid JSON: ", e.what()));
  }

  Dataset ds;
  ds.root = dir;
  ds.format_version = manifest.at("format_version").get<int>();
  LANTERN_CHECK(ds.format_version == kManifestVersion,
                "manifest '", manifest_path.string(),
                "': unsupported format_version ", ds.format_version);
  ds.image_size = manifest.at("image_size").get<int>();
  const auto bg = manifest.at("background").get<std::vector<double>>();
  LANTERN_CHECK(bg.size() == 3, "manifest: background must have 3 channels");
  std::copy(bg.begin(), bg.end(), ds.background.begin());
  for (const auto& jc : manifest.at("cameras"))
    ds.cameras.push_back(camera_from_json(jc));

  int expected_k = -1;
  for (const auto& jf : manifest.at("frames")) {
    FrameRecord rec;
    rec.id = jf.at("id").get<int>();
    rec.camera_id = jf.at("camera").get<int>();
    rec.config_id = jf.at("config").get<int>();
    rec.split = jf.at("split").get<std::string>();
    LANTERN_CHECK(rec.split == "train" || rec.split == "holdout",
                  "manifest: frame ", rec.id, " has unknown split '",
                  rec.split, "'");
    LANTERN_CHECK(rec.camera_id >= 0 &&
                      rec.camera_id < static_cast<int>(ds.cameras.size()),
                  "manifest: frame ", rec.id, " references missing camera ",
                  rec.camera_id);
    rec.landmarks.frame_index = rec.id;
    for (const auto& jp : jf.at("landmarks")) {
      const auto p = jp.get<std::vector<double>>();
      LANTERN_CHECK(p.size() == 3, "manifest: frame ", rec.id,
                    " has a non-3D landmark");
      rec.landmarks.points.push_back({p[0], p[1], p[2]});
    }
    validate_landmarks(rec.landmarks);
    if (expected_k < 0) expected_k = rec.landmarks.count();
    LANTERN_CHECK(rec.landmarks.count() == expected_k,
                  "manifest: inconsistent landmark count in frame ", rec.id);
    rec.png_path = jf.at("png").get<std::string>();
    rec.raw_path = jf.at("raw").get<std::string>();
    for (const std::string* p : {&rec.png_path, &rec.raw_path}) {
      const fs::path full = fs::path(dir) / *p;
      if (!fs::exists(full))
        throw ValidationError(
            cat("dataset: missing image file ", full.string()));
    }
    ds.frames.push_back(std::move(rec));
  }
  LANTERN_CHECK(!ds.frames.empty(), "dataset '", dir, "' has no frames");
  return ds;
}

Image load_frame_image(const Dataset& ds, const FrameRecord& frame) {
  return read_float_image((fs::path(ds.root) / frame.raw_path).string());
}

}  // namespace lantern

#include "lantern/camera.hpp"

#include <cmath>

namespace lantern {
namespace {

std::array<double, 3> cross(const std::array<double, 3>& a,
                            const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

std::array<double, 3> normalized(const std::array<double, 3>& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  LANTERN_CHECK(n > 1e-12, "camera: degenerate direction");
  return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

void validate_camera(const Camera& cam) {
  LANTERN_CHECK(cam.fx > 0 && cam.fy > 0, "camera: focal lengths must be > 0");
  LANTERN_CHECK(cam.width > 0 && cam.height > 0,
                "camera: image extent must be positive");
  const auto& R = cam.rotation;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      // (R^T R)_{ij} over columns i and j.
      double dot = 0;
      for (int k = 0; k < 3; ++k) dot += R[k * 3 + i] * R[k * 3 + j];
      const double expect = i == j ? 1.0 : 0.0;
      LANTERN_CHECK(std::abs(dot - expect) <= 1e-9,
                    "camera: rotation not orthonormal (R^T R deviates by ",
                    std::abs(dot - expect), ")");
    }
  }
}

Camera make_look_at_camera(const std::array<double, 3>& eye,
                           const std::array<double, 3>& target, double fx,
                           double fy, int width, int height) {
  const std::array<double, 3> forward = normalized(
      {target[0] - eye[0], target[1] - eye[1], target[2] - eye[2]});
  const std::array<double, 3> world_up = {0, 0, 1};
  const std::array<double, 3> right = normalized(cross(forward, world_up));
  const std::array<double, 3> down = cross(forward, right);

  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = width * 0.5;
  cam.cy = height * 0.5;
  cam.width = width;
  cam.height = height;
  cam.translation = eye;
  for (int i = 0; i < 3; ++i) {
    cam.rotation[i * 3 + 0] = right[i];
    cam.rotation[i * 3 + 1] = down[i];
    cam.rotation[i * 3 + 2] = forward[i];
  }
  validate_camera(cam);
  return cam;
}

namespace {

// Slab intersection with [0,1]^3. Returns false on miss.
bool unit_cube_span(const std::array<double, 3>& o,
                    const std::array<double, 3>& d, double& t_near,
                    double& t_far) {
  double tn = 0.0;
  double tf = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (o[k] < 0.0 || o[k] > 1.0) return false;
      continue;
    }
    double t0 = (0.0 - o[k]) / d[k];
    double t1 = (1.0 - o[k]) / d[k];
    if (t0 > t1) std::swap(t0, t1);
    tn = std::max(tn, t0);
    tf = std::min(tf, t1);
    if (tn >= tf) return false;
  }
  t_near = tn;
  t_far = tf;
  return true;
}

}  // namespace

Ray pixel_ray(const Camera& cam, double u, double v) {
  const double cx = (u + 0.5 - cam.cx) / cam.fx;
  const double cy = (v + 0.5 - cam.cy) / cam.fy;
  const auto& R = cam.rotation;
  std::array<double, 3> dir;
  for (int i = 0; i < 3; ++i)
    dir[i] = R[i * 3 + 0] * cx + R[i * 3 + 1] * cy + R[i * 3 + 2];
  const double n = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] +
                             dir[2] * dir[2]);
  for (int i = 0; i < 3; ++i) dir[i] /= n;

  Ray ray;
  ray.origin = cam.translation;
  ray.dir = dir;
  double tn, tf;
  if (unit_cube_span(ray.origin, ray.dir, tn, tf)) {
    ray.t_near = tn;
    ray.t_far = tf;
  }
  return ray;
}

std::vector<Ray> generate_rays(const Camera& cam,
                               std::span<const Pixel> pixels) {
  validate_camera(cam);
  std::vector<Ray> rays;
  rays.reserve(pixels.size());
  for (const Pixel& px : pixels) {
    LANTERN_CHECK(px.u >= 0 && px.u < cam.width && px.v >= 0 &&
                      px.v < cam.height,
                  "generate_rays: pixel (", px.u, ", ", px.v,
                  ") outside image bounds");
    rays.push_back(pixel_ray(cam, px.u, px.v));
  }
  return rays;
}

bool project_point(const Camera& cam, const std::array<double, 3>& p,
                   double& u, double& v) {
  const auto& R = cam.rotation;
  const std::array<double, 3> rel = {p[0] - cam.translation[0],
                                     p[1] - cam.translation[1],
                                     p[2] - cam.translation[2]};
  // Camera coordinates: columns of R are the camera basis in world space.
  std::array<double, 3> c;
  for (int j = 0; j < 3; ++j) {
    c[j] = 0;
    for (int i = 0; i < 3; ++i) c[j] += R[i * 3 + j] * rel[i];
  }
  if (c[2] <= 1e-12) return false;
  u = cam.fx * c[0] / c[2] + cam.cx - 0.5;
  v = cam.fy * c[1] / c[2] + cam.cy - 0.5;
  return true;
}

}  // namespace lantern

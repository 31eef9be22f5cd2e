#pragma once

#include <array>
#include <span>
#include <vector>

#include "lantern/common.hpp"

namespace lantern {

// Pinhole camera. Convention: camera x right, y down, z forward; rotation
// is camera-to-world (row-major, columns are the camera basis vectors in
// world space); translation is the camera center.
struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  std::array<double, 9> rotation = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> translation = {0, 0, 0};
  int width = 0, height = 0;
};

// Orthonormality within 1e-9, positive focal lengths, positive extent.
void validate_camera(const Camera& cam);

// Proper look-at rotation with world +z up.
Camera make_look_at_camera(const std::array<double, 3>& eye,
                           const std::array<double, 3>& target, double fx,
                           double fy, int width, int height);

struct Pixel {
  int u = 0;  // column
  int v = 0;  // row
};

// A ray with near/far against the unit-cube scene bounds. Rays that miss
// the cube carry t_near == t_far == 0.
struct Ray {
  std::array<double, 3> origin = {0, 0, 0};
  std::array<double, 3> dir = {0, 0, 1};
  double t_near = 0;
  double t_far = 0;

  bool hits() const { return t_far > t_near; }
};

// Rays through pixel centers (u+0.5, v+0.5), directions normalized,
// near/far from intersecting the unit cube.
std::vector<Ray> generate_rays(const Camera& cam,
                               std::span<const Pixel> pixels);

Ray pixel_ray(const Camera& cam, double u, double v);

// Projects a world point into pixel coordinates; false when behind the
// camera.
bool project_point(const Camera& cam, const std::array<double, 3>& p,
                   double& u, double& v);

}  // namespace lantern

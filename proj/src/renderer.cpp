#include "lantern/renderer.hpp"

#include <chrono>
#include <cmath>
#include <thread>

namespace lantern {

SampleBatch march(const Ray& ray, const OccupancyGrid* occ, int n_samples,
                  Pcg32& rng) {
  LANTERN_CHECK(n_samples >= 1, "march: n_samples must be >= 1");
  SampleBatch batch;
  if (!ray.hits()) {
    // State advances exactly n draws per ray regardless of geometry.
    for (int i = 0; i < n_samples; ++i) rng.next_double();
    return batch;
  }
  LANTERN_CHECK(ray.t_near >= 0, "march: t_near must be >= 0");
  batch.total_strata = n_samples;
  const double span = ray.t_far - ray.t_near;
  const double stratum = span / n_samples;

  std::vector<double> ts(n_samples);
  for (int i = 0; i < n_samples; ++i)
    ts[i] = ray.t_near + (i + rng.next_double()) * stratum;

  batch.t.reserve(n_samples);
  batch.delta.reserve(n_samples);
  batch.pos.reserve(3 * n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double t = ts[i];
    const double next = i + 1 < n_samples ? ts[i + 1] : ray.t_far;
    double p[3];
    for (int k = 0; k < 3; ++k) {
      double v = ray.origin[k] + t * ray.dir[k];
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      p[k] = v;
    }
    if (occ && !occ->occupied_at(p)) continue;  // treated as sigma = 0
    batch.t.push_back(t);
    batch.delta.push_back(next - t);
    batch.pos.insert(batch.pos.end(), p, p + 3);
  }
  return batch;
}

CompositeOut composite(std::span<const double> sigma,
                       std::span<const double> rgb,
                       std::span<const double> delta, const double bg[3],
                       double* weights) {
  const std::size_t n = sigma.size();
  LANTERN_CHECK(rgb.size() == 3 * n && delta.size() == n,
                "composite: length mismatch");
  CompositeOut out;
  double T = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    LANTERN_CHECK(sigma[i] >= 0, "composite: negative density at sample ", i);
    LANTERN_CHECK(delta[i] > 0, "composite: non-positive step at sample ", i);
    const double T_next = T * std::exp(-sigma[i] * delta[i]);
    const double w = T - T_next;
    if (weights) weights[i] = w;
    for (int c = 0; c < 3; ++c) out.rgb[c] += w * rgb[i * 3 + c];
    T = T_next;
  }
  out.t_final = T;
  for (int c = 0; c < 3; ++c) out.rgb[c] += T * bg[c];
  return out;
}

void composite_backward(std::span<const double> sigma,
                        std::span<const double> rgb,
                        std::span<const double> delta, const double bg[3],
                        const double dC[3], std::span<double> dsigma,
                        std::span<double> drgb) {
  const std::size_t n = sigma.size();
  LANTERN_CHECK(rgb.size() == 3 * n && delta.size() == n &&
                    dsigma.size() == n && drgb.size() == 3 * n,
                "composite_backward: length mismatch");
  // Transmittance chain T_0..T_n.
  std::vector<double> T(n + 1);
  T[0] = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    T[i + 1] = T[i] * std::exp(-sigma[i] * delta[i]);

  // Suffix color sum S_i = sum_{k>=i} w_k c_k + T_n * bg, walked backwards.
  double S[3] = {T[n] * bg[0], T[n] * bg[1], T[n] * bg[2]};
  for (std::size_t i = n; i-- > 0;) {
    const double w = T[i] - T[i + 1];
    double acc = 0;
    for (int c = 0; c < 3; ++c) {
      drgb[i * 3 + c] = w * dC[c];
      acc += dC[c] * (T[i + 1] * rgb[i * 3 + c] - S[c]);
    }
    dsigma[i] = delta[i] * acc;
    for (int c = 0; c < 3; ++c) S[c] += w * rgb[i * 3 + c];
  }
}

Image render_image(const Camera& cam, const FieldEval& field,
                   const OccupancyGrid* occ, int n_samples,
                   const double bg[3], std::uint64_t seed,
                   RenderStats* stats, int workers) {
  validate_camera(cam);
  LANTERN_CHECK(workers >= 1, "render_image: workers must be >= 1");
  const auto t_start = std::chrono::steady_clock::now();
  Image img(cam.width, cam.height, 3);
  const std::size_t n_pixels =
      static_cast<std::size_t>(cam.width) * cam.height;

  std::vector<RenderStats> worker_stats(workers);
  auto render_range = [&](std::size_t begin, std::size_t end,
                          RenderStats& st) {
    // Rays of this range, marched with per-pixel streams.
    std::vector<SampleBatch> batches;
    batches.reserve(end - begin);
    std::vector<double> pts, dirs;
    for (std::size_t p = begin; p < end; ++p) {
      const int u = static_cast<int>(p) % cam.width;
      const int v = static_cast<int>(p) / cam.width;
      const Ray ray = pixel_ray(cam, u, v);
      Pcg32 rng(seed, rng_stream(0x6d61726368ULL, p));
      SampleBatch b = march(ray, occ, n_samples, rng);
      st.strata += b.total_strata;
      for (std::size_t s = 0; s < b.kept(); ++s) {
        dirs.insert(dirs.end(), ray.dir.begin(), ray.dir.end());
      }
      pts.insert(pts.end(), b.pos.begin(), b.pos.end());
      batches.push_back(std::move(b));
    }
    const std::size_t count = pts.size() / 3;
    std::vector<double> sigma(count), rgb(count * 3);
    if (count > 0)
      field.eval(pts.data(), dirs.data(), count, sigma.data(), rgb.data());
    st.field_evals += count;
    st.rays += end - begin;

    std::size_t off = 0;
    for (std::size_t p = begin; p < end; ++p) {
      const SampleBatch& b = batches[p - begin];
      const std::size_t k = b.kept();
      const CompositeOut out = composite(
          std::span(sigma.data() + off, k), std::span(rgb.data() + off * 3, k * 3),
          std::span(b.delta.data(), k), bg);
      const int u = static_cast<int>(p) % cam.width;
      const int v = static_cast<int>(p) / cam.width;
      for (int c = 0; c < 3; ++c) img.at(u, v, c) = out.rgb[c];
      off += k;
    }
  };

  if (workers == 1) {
    render_range(0, n_pixels, worker_stats[0]);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_pixels + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(n_pixels, w * chunk);
      const std::size_t end = std::min(n_pixels, begin + chunk);
      pool.emplace_back(render_range, begin, end,
                        std::ref(worker_stats[w]));
    }
    for (auto& th : pool) th.join();
  }

  if (stats) {
    for (const auto& ws : worker_stats) {
      stats->field_evals += ws.field_evals;
      stats->rays += ws.rays;
      stats->strata += ws.strata;
    }
    stats->seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
  }
  return img;
}

}  // namespace lantern

#include "lantern/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include "lantern/checkpoint.hpp"
#include "lantern/losses.hpp"
#include "lantern/metrics.hpp"
#include "lantern/renderer.hpp"

namespace fs = std::filesystem;

namespace lantern {

Precision precision_from_string(const std::string& s) {
  if (s == "f64") return Precision::kF64;
  if (s == "f32") return Precision::kF32;
  throw ValidationError(cat("unknown precision '", s, "' (f64|f32)"));
}

std::string precision_to_string(Precision p) {
  return p == Precision::kF64 ? "f64" : "f32";
}

void validate_train_config(const TrainConfig& cfg, int image_size) {
  LANTERN_CHECK(cfg.total_steps >= 0, "train: total_steps must be >= 0");
  LANTERN_CHECK(cfg.rays_per_step >= 1, "train: rays_per_step must be >= 1");
  LANTERN_CHECK(cfg.lr_grid >= 0 && cfg.lr_mlp >= 0,
                "train: learning rates must be >= 0");
  LANTERN_CHECK(0 < cfg.milestone1 && cfg.milestone1 < cfg.milestone2 &&
                    cfg.milestone2 < cfg.finetune_start &&
                    cfg.finetune_start < 1,
                "train: need 0 < milestone1 < milestone2 < finetune_start < 1");
  LANTERN_CHECK(cfg.lambda_patch >= 0, "train: lambda_patch must be >= 0");
  LANTERN_CHECK(cfg.patch_size >= 2 && cfg.patch_size <= image_size,
                "train: patch_size must be in [2, image_size]");
  LANTERN_CHECK(cfg.schedule_initial >= 0 && cfg.schedule_interval >= 1,
                "train: invalid progressive schedule");
  LANTERN_CHECK(cfg.occ_update_interval >= 1 && cfg.occ_conditions >= 1,
                "train: invalid occupancy cadence");
  LANTERN_CHECK(cfg.train_samples >= 1 && cfg.eval_samples >= 1,
                "train: sample counts must be >= 1");
  LANTERN_CHECK(cfg.workers >= 1, "train: workers must be >= 1");
  LANTERN_CHECK(cfg.log_interval >= 1, "train: log_interval must be >= 1");
}

double lr_multiplier(const TrainConfig& cfg, int step) {
  LANTERN_CHECK(step >= 0 && step <= cfg.total_steps,
                "lr_multiplier: step out of range");
  const double f =
      cfg.total_steps == 0 ? 0.0 : static_cast<double>(step) / cfg.total_steps;
  double u = f;
  if (f >= cfg.finetune_start) {
    // Learning rate resets at the fine-tune boundary and replays the same
    // decay pattern across the remaining span.
    u = (f - cfg.finetune_start) / (1.0 - cfg.finetune_start);
  }
  if (u < cfg.milestone1) return 1.0;
  if (u < cfg.milestone2) return 0.1;
  return 0.01;
}

void TrainLog::write_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw EngineError(cat("cannot write train log: ", path));
  os.precision(17);
  os << "step,loss_color,loss_patch,active_levels,probe_psnr,field_evals\n";
  for (const auto& r : rows)
    os << r.step << ',' << r.loss_color << ',' << r.loss_patch << ','
       << r.active_levels << ',' << r.probe_psnr << ',' << r.field_evals
       << '\n';
  if (!os) throw EngineError(cat("train log write failed: ", path));
}

namespace {

constexpr std::uint64_t kStreamFrame = 0x7472616d65ULL;
constexpr std::uint64_t kStreamPixels = 0x706978ULL;
constexpr std::uint64_t kStreamMarch = 0x6d727368ULL;
constexpr std::uint64_t kStreamOcc = 0x6f6363ULL;
constexpr std::uint64_t kStreamProbe = 0x70726f62ULL;

// Soft cap on samples per forward/backward chunk; bounds workspace memory.
constexpr std::size_t kChunkSampleBudget = 8192;

std::vector<LandmarkFrame> frame_window(const FieldDef& def,
                                        const LandmarkFrame& lm) {
  const int w = def.cond ? def.cond->window : 1;
  return std::vector<LandmarkFrame>(static_cast<std::size_t>(w), lm);
}

void run_ranges(std::size_t n, int workers,
                const std::function<void(int, std::size_t, std::size_t)>& fn) {
  if (workers <= 1 || n == 0) {
    fn(0, 0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(w, begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

template <class T>
void merge_acc(FieldGradAcc<T>& dst, const FieldGradAcc<T>& src) {
  auto add = [](std::vector<T>& a, const std::vector<T>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  for (std::size_t i = 0; i < dst.pos_tables.size(); ++i)
    add(dst.pos_tables[i], src.pos_tables[i]);
  for (std::size_t i = 0; i < dst.sigma_w.size(); ++i) {
    add(dst.sigma_w[i], src.sigma_w[i]);
    add(dst.sigma_b[i], src.sigma_b[i]);
  }
  for (std::size_t i = 0; i < dst.color_w.size(); ++i) {
    add(dst.color_w[i], src.color_w[i]);
    add(dst.color_b[i], src.color_b[i]);
  }
  for (std::size_t i = 0; i < dst.dalpha.size(); ++i) {
    add(dst.dalpha[i], src.dalpha[i]);
    add(dst.dbeta[i], src.dbeta[i]);
  }
  add(dst.color_dalpha, src.color_dalpha);
  add(dst.color_dbeta, src.color_dbeta);
  add(dst.dh_cond, src.dh_cond);
}

template <class T>
void apply_acc(const FieldDef& def, const ParamStore& store,
               const FrameContext* ctx, const FieldGradAcc<T>& acc,
               GradBuffer& grads) {
  if constexpr (std::is_same_v<T, real>) {
    apply_field_grads(def, store, ctx, acc, grads);
  } else {
    FieldGradAcc<real> tmp;
    cast_grad_acc(acc, tmp);
    apply_field_grads(def, store, ctx, tmp, grads);
  }
}

// Rays of one training step with their ground-truth colors.
struct RayWork {
  std::vector<Ray> rays;
  std::vector<std::array<double, 3>> gt;
  std::vector<SampleBatch> batches;  // filled by march_all
  std::uint64_t kept_samples = 0;
};

void march_all(RayWork& work, const OccupancyGrid& occ, int n_samples,
               std::uint64_t seed, std::uint64_t step) {
  work.batches.resize(work.rays.size());
  work.kept_samples = 0;
  for (std::size_t i = 0; i < work.rays.size(); ++i) {
    Pcg32 rng(seed, rng_stream(kStreamMarch, step, i));
    work.batches[i] = march(work.rays[i], &occ, n_samples, rng);
    work.kept_samples += work.batches[i].kept();
  }
}

// Forward + composite over [begin, end); when dC_fn is provided, also runs
// the backward pass into acc. pred receives per-ray composited colors.
template <class T>
std::uint64_t process_rays(
    const FieldPipeline<T>& pipe, const LevelMask& mask,
    const FrameCond<T>* cond, const RayWork& work, const double bg[3],
    std::size_t begin, std::size_t end,
    std::vector<std::array<double, 3>>& pred,
    const std::function<void(std::size_t, double*)>* dC_fn,
    FieldGradAcc<T>* acc) {
  std::uint64_t evals = 0;
  std::size_t i = begin;
  std::vector<double> pts, dirs;
  std::vector<T> sigma, rgb, dsigma, drgb;
  std::vector<double> sigma_d, rgb_d, dsig_d, drgb_d;
  while (i < end) {
    // Gather rays until the sample budget is hit.
    std::size_t j = i;
    std::size_t count = 0;
    pts.clear();
    dirs.clear();
    while (j < end &&
           (count == 0 || count + work.batches[j].kept() <= kChunkSampleBudget)) {
      const SampleBatch& b = work.batches[j];
      pts.insert(pts.end(), b.pos.begin(), b.pos.end());
      for (std::size_t s = 0; s < b.kept(); ++s)
        dirs.insert(dirs.end(), work.rays[j].dir.begin(),
                    work.rays[j].dir.end());
      count += b.kept();
      ++j;
    }

    sigma.resize(count);
    rgb.resize(count * 3);
    FieldFwdCache<T> cache;
    pipe.forward(pts.data(), dirs.data(), count, mask, cond, sigma.data(),
                 rgb.data(), dC_fn ? &cache : nullptr);
    evals += count;

    // Composite per ray in double.
    sigma_d.assign(sigma.begin(), sigma.end());
    rgb_d.assign(rgb.begin(), rgb.end());
    if (dC_fn) {
      dsig_d.assign(count, 0.0);
      drgb_d.assign(count * 3, 0.0);
    }
    std::size_t off = 0;
    for (std::size_t r = i; r < j; ++r) {
      const SampleBatch& b = work.batches[r];
      const std::size_t k = b.kept();
      const CompositeOut out =
          composite(std::span(sigma_d.data() + off, k),
                    std::span(rgb_d.data() + off * 3, k * 3),
                    std::span(b.delta.data(), k), bg);
      pred[r] = out.rgb;
      if (dC_fn) {
        double dC[3];
        (*dC_fn)(r, dC);
        composite_backward(std::span(sigma_d.data() + off, k),
                           std::span(rgb_d.data() + off * 3, k * 3),
                           std::span(b.delta.data(), k), bg, dC,
                           std::span(dsig_d.data() + off, k),
                           std::span(drgb_d.data() + off * 3, k * 3));
      }
      off += k;
    }

    if (dC_fn) {
      dsigma.assign(dsig_d.begin(), dsig_d.end());
      drgb.assign(drgb_d.begin(), drgb_d.end());
      pipe.backward(cache, pts.data(), count, mask, cond, dsigma.data(),
                    drgb.data(), *acc);
    }
    i = j;
  }
  return evals;
}

}  // namespace

template <class T>
static TrainResult train_impl(const Dataset& ds, const FieldDef& def,
                              ParamStore& store, const TrainConfig& cfg,
                              const std::string& out_dir) {
  const auto t_start = std::chrono::steady_clock::now();

  // Ground truth in memory, indexed by frame.
  std::vector<Image> gt_images;
  gt_images.reserve(ds.frames.size());
  for (const auto& f : ds.frames) gt_images.push_back(load_frame_image(ds, f));
  const std::vector<std::size_t> train_idx = ds.split_indices("train");
  LANTERN_CHECK(!train_idx.empty(), "train: dataset has no train frames");
  const std::vector<std::size_t> holdout_idx = ds.split_indices("holdout");
  const std::size_t probe_idx =
      holdout_idx.empty() ? train_idx.front() : holdout_idx.front();

  FieldPipeline<T> pipe(def);
  pipe.sync(store);
  OccupancyGrid occ(cfg.occ_resolution, cfg.occ_threshold, cfg.occ_decay);
  GradBuffer grads(store);
  AdamWState opt_state(store);
  AdamWHyper hp;
  hp.lr_grid = cfg.lr_grid;
  hp.lr_mlp = cfg.lr_mlp;

  const ProgressiveSchedule sched{cfg.schedule_initial, cfg.schedule_interval,
                                  def.pos_grid.cfg.levels};
  const bool progressive = def.variant == Variant::kMagloProgressive;
  const int finetune_step = static_cast<int>(
      std::llround(cfg.finetune_start * cfg.total_steps));
  const double* bg = ds.background.data();

  std::vector<FieldGradAcc<T>> accs(cfg.workers);
  for (auto& a : accs) a.init(def);

  TrainResult result;
  std::uint64_t field_evals = 0;

  auto probe_psnr = [&](const LevelMask& mask) {
    const FrameRecord& frame = ds.frames[probe_idx];
    FrameContext ctx;
    FrameCond<T> fc;
    const FrameCond<T>* fc_ptr = nullptr;
    if (def.conditioned()) {
      const auto window = frame_window(def, frame.landmarks);
      ctx = make_frame_context(def, store, window);
      fc = make_frame_cond<T>(def, store, ctx);
      fc_ptr = &fc;
    }
    NeuralFieldEval<T> eval(pipe, fc_ptr, mask);
    const Image img = render_image(ds.cameras[frame.camera_id], eval, &occ,
                                   cfg.eval_samples, bg,
                                   rng_stream(kStreamProbe, cfg.seed));
    return psnr(img, gt_images[probe_idx]);
  };

  auto log_row = [&](int step, const LevelMask& mask, double loss_color,
                     double loss_patch) {
    TrainLogRow row;
    row.step = step;
    row.loss_color = loss_color;
    row.loss_patch = loss_patch;
    row.active_levels = mask.active_levels;
    row.probe_psnr = probe_psnr(mask);
    row.field_evals = field_evals;
    result.log.rows.push_back(row);
  };

  for (int step = 0; step < cfg.total_steps; ++step) {
    const LevelMask mask = progressive
                               ? schedule_mask(sched, step)
                               : LevelMask::full(def.pos_grid.cfg.levels);

    // Occupancy maintenance across sampled conditions.
    if (step % cfg.occ_update_interval == 0) {
      Pcg32 occ_rng(cfg.seed, rng_stream(kStreamOcc, step));
      const int n_conds = def.conditioned() ? cfg.occ_conditions : 1;
      std::vector<FrameContext> ctxs(n_conds);
      std::vector<FrameCond<T>> fcs(n_conds);
      std::vector<NeuralFieldEval<T>> evals;
      std::vector<const FieldEval*> eval_ptrs;
      evals.reserve(n_conds);
      for (int c = 0; c < n_conds; ++c) {
        const FrameCond<T>* fc_ptr = nullptr;
        if (def.conditioned()) {
          const std::size_t fi = train_idx[occ_rng.next_below(
              static_cast<std::uint32_t>(train_idx.size()))];
          const auto window = frame_window(def, ds.frames[fi].landmarks);
          ctxs[c] = make_frame_context(def, store, window);
          fcs[c] = make_frame_cond<T>(def, store, ctxs[c]);
          fc_ptr = &fcs[c];
        }
        evals.emplace_back(pipe, fc_ptr, mask);
      }
      for (const auto& e : evals) eval_ptrs.push_back(&e);
      update_occupancy(occ, eval_ptrs, occ_rng);
      field_evals +=
          static_cast<std::uint64_t>(n_conds) * occ.cell_count();
    }

    // Frame of this step.
    Pcg32 frame_rng(cfg.seed, rng_stream(kStreamFrame, step));
    const std::size_t frame_i = train_idx[frame_rng.next_below(
        static_cast<std::uint32_t>(train_idx.size()))];
    const FrameRecord& frame = ds.frames[frame_i];
    const Camera& cam = ds.cameras[frame.camera_id];
    const Image& gt = gt_images[frame_i];

    FrameContext ctx;
    FrameCond<T> fc;
    const FrameCond<T>* fc_ptr = nullptr;
    if (def.conditioned()) {
      const auto window = frame_window(def, frame.landmarks);
      ctx = make_frame_context(def, store, window);
      fc = make_frame_cond<T>(def, store, ctx);
      fc_ptr = &fc;
    }

    const bool stage2 = step >= finetune_step;
    double loss_color = 0;
    double loss_patch = 0;

    if (!stage2) {
      // Stage 1: random pixels across the frame, MSE on composited colors.
      RayWork work;
      Pcg32 px_rng(cfg.seed, rng_stream(kStreamPixels, step));
      std::vector<Pixel> pixels(cfg.rays_per_step);
      for (auto& px : pixels) {
        const std::uint32_t p = px_rng.next_below(
            static_cast<std::uint32_t>(cam.width * cam.height));
        px.u = static_cast<int>(p) % cam.width;
        px.v = static_cast<int>(p) / cam.width;
      }
      work.rays = generate_rays(cam, pixels);
      work.gt.resize(pixels.size());
      for (std::size_t i = 0; i < pixels.size(); ++i)
        for (int c = 0; c < 3; ++c)
          work.gt[i][c] = gt.at(pixels[i].u, pixels[i].v, c);
      march_all(work, occ, cfg.train_samples, cfg.seed, step);

      const double norm = static_cast<double>(work.rays.size()) * 3.0;
      std::vector<std::array<double, 3>> pred(work.rays.size());
      std::function<void(std::size_t, double*)> dC_fn =
          [&](std::size_t r, double* dC) {
            for (int c = 0; c < 3; ++c)
              dC[c] = 2.0 * (pred[r][c] - work.gt[r][c]) / norm;
          };
      std::vector<std::uint64_t> w_evals(cfg.workers, 0);
      run_ranges(work.rays.size(), cfg.workers,
                 [&](int w, std::size_t begin, std::size_t end) {
                   w_evals[w] += process_rays<T>(pipe, mask, fc_ptr, work, bg,
                                                 begin, end, pred, &dC_fn,
                                                 &accs[w]);
                 });
      for (auto e : w_evals) field_evals += e;
      double sq = 0;
      for (std::size_t i = 0; i < pred.size(); ++i)
        for (int c = 0; c < 3; ++c) {
          const double d = pred[i][c] - work.gt[i][c];
          sq += d * d;
        }
      loss_color = sq / norm;
      if (!std::isfinite(loss_color))
        throw EngineError(cat("train: non-finite color loss at step ", step));
    } else {
      // Stage 2: square patch centered on the projected landmark centroid.
      const int P = cfg.patch_size;
      double cu = cam.width / 2.0, cv = cam.height / 2.0;
      project_point(cam, frame.landmarks.centroid(), cu, cv);
      int x0 = static_cast<int>(std::lround(cu)) - P / 2;
      int y0 = static_cast<int>(std::lround(cv)) - P / 2;
      x0 = std::min(std::max(x0, 0), cam.width - P);
      y0 = std::min(std::max(y0, 0), cam.height - P);

      RayWork work;
      std::vector<Pixel> pixels;
      pixels.reserve(static_cast<std::size_t>(P) * P);
      for (int v = 0; v < P; ++v)
        for (int u = 0; u < P; ++u) pixels.push_back({x0 + u, y0 + v});
      work.rays = generate_rays(cam, pixels);
      march_all(work, occ, cfg.train_samples, cfg.seed, step);

      // Phase A: render the patch.
      std::vector<std::array<double, 3>> pred(work.rays.size());
      std::vector<std::uint64_t> w_evals(cfg.workers, 0);
      run_ranges(work.rays.size(), cfg.workers,
                 [&](int w, std::size_t begin, std::size_t end) {
                   w_evals[w] += process_rays<T>(pipe, mask, fc_ptr, work, bg,
                                                 begin, end, pred, nullptr,
                                                 nullptr);
                 });
      Image pred_patch(P, P, 3), gt_patch(P, P, 3);
      for (int v = 0; v < P; ++v)
        for (int u = 0; u < P; ++u)
          for (int c = 0; c < 3; ++c) {
            pred_patch.at(u, v, c) = pred[v * P + u][c];
            gt_patch.at(u, v, c) = gt.at(x0 + u, y0 + v, c);
          }
      Image grad_patch(P, P, 3);
      const PatchLossOut pl =
          patch_loss(pred_patch, gt_patch, cfg.lambda_patch, &grad_patch);
      loss_color = pl.mse;
      loss_patch = pl.perceptual;
      if (!std::isfinite(pl.total))
        throw EngineError(cat("train: non-finite patch loss at step ", step));

      // Phase B: recompute forward with caches and push gradients back.
      std::function<void(std::size_t, double*)> dC_fn =
          [&](std::size_t r, double* dC) {
            const int u = static_cast<int>(r) % P;
            const int v = static_cast<int>(r) / P;
            for (int c = 0; c < 3; ++c) dC[c] = grad_patch.at(u, v, c);
          };
      run_ranges(work.rays.size(), cfg.workers,
                 [&](int w, std::size_t begin, std::size_t end) {
                   w_evals[w] += process_rays<T>(pipe, mask, fc_ptr, work, bg,
                                                 begin, end, pred, &dC_fn,
                                                 &accs[w]);
                 });
      for (auto e : w_evals) field_evals += e;
    }

    // Fixed-order reduction, then the optimizer step.
    for (int w = 1; w < cfg.workers; ++w) merge_acc(accs[0], accs[w]);
    apply_acc<T>(def, store, def.conditioned() ? &ctx : nullptr, accs[0],
                 grads);
    adamw_step(store, grads, opt_state, hp, lr_multiplier(cfg, step));
    grads.reset();
    for (auto& a : accs) a.reset();
    if constexpr (!std::is_same_v<T, real>) pipe.sync(store);

    if (step % cfg.log_interval == 0 || step + 1 == cfg.total_steps)
      log_row(step, mask, loss_color, loss_patch);
    result.final_loss_color = loss_color;
    result.final_loss_patch = loss_patch;

    if (!out_dir.empty() && cfg.checkpoint_interval > 0 && step > 0 &&
        step % cfg.checkpoint_interval == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_%06d.r2tk", step);
      save_checkpoint(store, (fs::path(out_dir) / name).string());
    }
  }

  result.occupancy = std::move(occ);
  result.field_evals = field_evals;
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    save_checkpoint(store, (fs::path(out_dir) / "checkpoint.r2tk").string());
    save_occupancy(result.occupancy,
                   (fs::path(out_dir) / "occupancy.bin").string());
    result.log.write_csv((fs::path(out_dir) / "train_log.csv").string());
  }
  return result;
}

TrainResult train(const Dataset& dataset, const FieldDef& def,
                  ParamStore& store, const TrainConfig& cfg,
                  const std::string& out_dir) {
  validate_train_config(cfg, dataset.image_size);
  if (!out_dir.empty()) fs::create_directories(out_dir);
  if (cfg.precision == Precision::kF64)
    return train_impl<double>(dataset, def, store, cfg, out_dir);
  return train_impl<float>(dataset, def, store, cfg, out_dir);
}

}  // namespace lantern

#include "lantern/field.hpp"

#include <cmath>
#include <cstring>

namespace lantern {

Variant variant_from_string(const std::string& s) {
  if (s == "unconditioned") return Variant::kUnconditioned;
  if (s == "glo") return Variant::kGlo;
  if (s == "maglo") return Variant::kMaglo;
  if (s == "maglo-progressive") return Variant::kMagloProgressive;
  throw ValidationError(cat("unknown variant '", s,
                            "' (expected unconditioned|glo|maglo|"
                            "maglo-progressive)"));
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::kUnconditioned:
      return "unconditioned";
    case Variant::kGlo:
      return "glo";
    case Variant::kMaglo:
      return "maglo";
    case Variant::kMagloProgressive:
      return "maglo-progressive";
  }
  return "unknown";
}

std::array<double, 16> dir_encode(const double d[3]) {
  const double x = d[0], y = d[1], z = d[2];
  const double norm = std::sqrt(x * x + y * y + z * z);
  LANTERN_CHECK(std::isfinite(norm) && std::abs(norm - 1.0) <= 1e-6,
                "dir_encode: direction must be unit length, |d| = ", norm);
  const double xx = x * x, yy = y * y, zz = z * z;
  std::array<double, 16> sh;
  // l = 0
  sh[0] = 0.28209479177387814;
  // l = 1: m = -1, 0, 1
  sh[1] = 0.4886025119029199 * y;
  sh[2] = 0.4886025119029199 * z;
  sh[3] = 0.4886025119029199 * x;
  // l = 2
  sh[4] = 1.0925484305920792 * x * y;
  sh[5] = 1.0925484305920792 * y * z;
  sh[6] = 0.31539156525252005 * (3.0 * zz - 1.0);
  sh[7] = 1.0925484305920792 * x * z;
  sh[8] = 0.5462742152960396 * (xx - yy);
  // l = 3
  sh[9] = 0.5900435899266435 * y * (3.0 * xx - yy);
  sh[10] = 2.890611442640554 * x * y * z;
  sh[11] = 0.4570457994644658 * y * (5.0 * zz - 1.0);
  sh[12] = 0.3731763325901154 * z * (5.0 * zz - 3.0);
  sh[13] = 0.4570457994644658 * x * (5.0 * zz - 1.0);
  sh[14] = 1.445305721320277 * z * (xx - yy);
  sh[15] = 0.5900435899266435 * x * (xx - 3.0 * yy);
  return sh;
}

double density_activation(double raw) {
  LANTERN_REQUIRE(std::isfinite(raw), "density_activation: non-finite input");
  const double clamped = raw < -15.0 ? -15.0 : (raw > 15.0 ? 15.0 : raw);
  return std::exp(clamped);
}

double density_activation_grad(double raw) {
  if (raw <= -15.0 || raw >= 15.0) return 0.0;
  return std::exp(raw);
}

FieldDef create_field(const FieldConfig& cfg, ParamStore& store,
                      std::uint64_t seed) {
  LANTERN_CHECK(cfg.sigma_layers >= 2, "field: sigma net needs >= 2 layers");
  LANTERN_CHECK(cfg.color_layers >= 1, "field: color head needs >= 1 layer");
  LANTERN_CHECK(cfg.sigma_hidden >= 1 && cfg.color_hidden >= 1 &&
                    cfg.geom_features >= 1,
                "field: widths must be positive");

  FieldDef def;
  def.variant = cfg.variant;
  def.geom = cfg.geom_features;
  def.modulate_color = cfg.modulate_color;
  def.pos_grid = create_grid(cfg.pos_grid, store, "pos_grid", seed);

  const bool conditioned = cfg.variant != Variant::kUnconditioned;
  if (conditioned) {
    def.cond = create_cond_encoder(store, "cond", cfg.landmarks, cfg.window,
                                   cfg.lm_grid, cfg.cond_mlp_hidden,
                                   cfg.d_cond, seed, !cfg.branch_raw_input);
  }

  const bool modulated = cfg.variant == Variant::kMaglo ||
                         cfg.variant == Variant::kMagloProgressive;
  def.sigma_in = def.pos_grid.feature_width() +
                 (cfg.variant == Variant::kGlo ? def.cond->d_cond : 0);

  std::vector<int> sigma_dims;
  sigma_dims.push_back(def.sigma_in);
  for (int i = 0; i + 1 < cfg.sigma_layers; ++i)
    sigma_dims.push_back(cfg.sigma_hidden);
  sigma_dims.push_back(1 + cfg.geom_features);
  for (std::size_t i = 0; i + 1 < sigma_dims.size(); ++i)
    def.sigma_net.push_back(create_linear(store, cat("sigma/fc", i),
                                          sigma_dims[i], sigma_dims[i + 1],
                                          seed, LinearInit::kHeUniform));

  std::vector<int> color_dims;
  color_dims.push_back(cfg.geom_features + kDirEncodeWidth);
  for (int i = 0; i + 1 < cfg.color_layers; ++i)
    color_dims.push_back(cfg.color_hidden);
  color_dims.push_back(3);
  for (std::size_t i = 0; i + 1 < color_dims.size(); ++i)
    def.color_net.push_back(create_linear(store, cat("color/fc", i),
                                          color_dims[i], color_dims[i + 1],
                                          seed, LinearInit::kHeUniform));

  if (modulated) {
    def.modulated_layers = cfg.modulated_layers;
    if (def.modulated_layers.empty()) {
      for (int i = 0; i + 1 < cfg.sigma_layers; ++i)
        def.modulated_layers.push_back(i);
    }
    int prev = -1;
    for (int idx : def.modulated_layers) {
      LANTERN_CHECK(idx > prev && idx + 1 < cfg.sigma_layers,
                    "field: modulated layer index ", idx, " invalid");
      prev = idx;
      // Branches start at zero so modulation begins as an exact identity.
      def.branches.push_back(create_linear(store, cat("branch/h", idx),
                                           def.cond->d_cond,
                                           2 * sigma_dims[idx + 1], seed,
                                           LinearInit::kZero));
    }
    if (cfg.modulate_color) {
      LANTERN_CHECK(cfg.color_layers >= 2,
                    "field: color modulation needs a hidden color layer");
      def.color_branch =
          create_linear(store, "branch/color", def.cond->d_cond,
                        2 * cfg.color_hidden, seed, LinearInit::kZero);
    }
  } else {
    LANTERN_CHECK(!cfg.modulate_color,
                  "field: modulate_color requires a maglo variant");
  }
  return def;
}

FrameContext make_frame_context(const FieldDef& def, const ParamStore& store,
                                std::span<const LandmarkFrame> window) {
  FrameContext ctx;
  if (def.conditioned())
    ctx.h_cond = encode_landmarks(*def.cond, store, window, &ctx.cond_cache);
  return ctx;
}

template <class T>
FrameCond<T> make_frame_cond(const FieldDef& def, const ParamStore& store,
                             const FrameContext& ctx) {
  FrameCond<T> out;
  if (!def.conditioned()) return out;
  out.h_cond.assign(ctx.h_cond.begin(), ctx.h_cond.end());
  for (std::size_t b = 0; b < def.branches.size(); ++b) {
    AffineBranchOut ab = branch_params(def.branches[b], store, ctx.h_cond);
    out.alpha.emplace_back(ab.alpha.begin(), ab.alpha.end());
    out.beta.emplace_back(ab.beta.begin(), ab.beta.end());
  }
  if (def.modulate_color) {
    AffineBranchOut ab = branch_params(def.color_branch, store, ctx.h_cond);
    out.color_alpha.assign(ab.alpha.begin(), ab.alpha.end());
    out.color_beta.assign(ab.beta.begin(), ab.beta.end());
  }
  return out;
}

template FrameCond<double> make_frame_cond<double>(const FieldDef&,
                                                   const ParamStore&,
                                                   const FrameContext&);
template FrameCond<float> make_frame_cond<float>(const FieldDef&,
                                                 const ParamStore&,
                                                 const FrameContext&);

template <class T>
void FieldGradAcc<T>::init(const FieldDef& def) {
  pos_tables.resize(def.pos_grid.levels.size());
  for (std::size_t l = 0; l < def.pos_grid.levels.size(); ++l)
    pos_tables[l].assign(def.pos_grid.levels[l].rows *
                             def.pos_grid.cfg.features_per_level,
                         T(0));
  sigma_w.resize(def.sigma_net.size());
  sigma_b.resize(def.sigma_net.size());
  for (std::size_t i = 0; i < def.sigma_net.size(); ++i) {
    sigma_w[i].assign(static_cast<std::size_t>(def.sigma_net[i].in) *
                          def.sigma_net[i].out,
                      T(0));
    sigma_b[i].assign(def.sigma_net[i].out, T(0));
  }
  color_w.resize(def.color_net.size());
  color_b.resize(def.color_net.size());
  for (std::size_t i = 0; i < def.color_net.size(); ++i) {
    color_w[i].assign(static_cast<std::size_t>(def.color_net[i].in) *
                          def.color_net[i].out,
                      T(0));
    color_b[i].assign(def.color_net[i].out, T(0));
  }
  dalpha.resize(def.branches.size());
  dbeta.resize(def.branches.size());
  for (std::size_t b = 0; b < def.branches.size(); ++b) {
    dalpha[b].assign(def.branches[b].out / 2, T(0));
    dbeta[b].assign(def.branches[b].out / 2, T(0));
  }
  if (def.modulate_color) {
    color_dalpha.assign(def.color_branch.out / 2, T(0));
    color_dbeta.assign(def.color_branch.out / 2, T(0));
  }
  if (def.variant == Variant::kGlo) dh_cond.assign(def.cond->d_cond, T(0));
}

template <class T>
void FieldGradAcc<T>::reset() {
  auto zero = [](std::vector<T>& v) { std::fill(v.begin(), v.end(), T(0)); };
  for (auto& t : pos_tables) zero(t);
  for (auto& t : sigma_w) zero(t);
  for (auto& t : sigma_b) zero(t);
  for (auto& t : color_w) zero(t);
  for (auto& t : color_b) zero(t);
  for (auto& t : dalpha) zero(t);
  for (auto& t : dbeta) zero(t);
  zero(color_dalpha);
  zero(color_dbeta);
  zero(dh_cond);
}

template struct FieldGradAcc<double>;
template struct FieldGradAcc<float>;

void cast_grad_acc(const FieldGradAcc<float>& src, FieldGradAcc<double>& dst) {
  auto cast = [](const std::vector<float>& a, std::vector<double>& b) {
    b.assign(a.begin(), a.end());
  };
  dst.pos_tables.resize(src.pos_tables.size());
  for (std::size_t i = 0; i < src.pos_tables.size(); ++i)
    cast(src.pos_tables[i], dst.pos_tables[i]);
  auto cast_all = [&](const auto& a, auto& b) {
    b.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) cast(a[i], b[i]);
  };
  cast_all(src.sigma_w, dst.sigma_w);
  cast_all(src.sigma_b, dst.sigma_b);
  cast_all(src.color_w, dst.color_w);
  cast_all(src.color_b, dst.color_b);
  cast_all(src.dalpha, dst.dalpha);
  cast_all(src.dbeta, dst.dbeta);
  cast(src.color_dalpha, dst.color_dalpha);
  cast(src.color_dbeta, dst.color_dbeta);
  cast(src.dh_cond, dst.dh_cond);
}

namespace {

template <class T>
LinearView<T> view_of(const LinearDef& def, const T* w, const T* b) {
  return LinearView<T>{w, b, def.in, def.out};
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

template <class T>
void FieldPipeline<T>::sync(const ParamStore& store) {
  pos_tables_.clear();
  sigma_views_.clear();
  color_views_.clear();
  owned_.clear();
  const FieldDef& def = *def_;
  if constexpr (std::is_same_v<T, real>) {
    for (std::size_t h : def.pos_grid.handles)
      pos_tables_.push_back(store.values(h).data());
    for (const auto& l : def.sigma_net)
      sigma_views_.push_back(linear_view(l, store));
    for (const auto& l : def.color_net)
      color_views_.push_back(linear_view(l, store));
  } else {
    auto convert = [&](std::size_t h) -> const T* {
      const auto v = store.values(h);
      owned_.emplace_back(v.begin(), v.end());
      return owned_.back().data();
    };
    // Reserve first: growing owned_ must not invalidate earlier pointers.
    owned_.reserve(def.pos_grid.handles.size() +
                   2 * (def.sigma_net.size() + def.color_net.size()));
    for (std::size_t h : def.pos_grid.handles)
      pos_tables_.push_back(convert(h));
    for (const auto& l : def.sigma_net)
      sigma_views_.push_back(
          view_of(l, convert(l.w_handle), convert(l.b_handle)));
    for (const auto& l : def.color_net)
      color_views_.push_back(
          view_of(l, convert(l.w_handle), convert(l.b_handle)));
  }
}

template <class T>
void FieldPipeline<T>::forward(const double* pts, const double* dirs,
                               std::size_t count, const LevelMask& mask,
                               const FrameCond<T>* cond, T* sigma, T* rgb,
                               FieldFwdCache<T>* cache) const {
  const FieldDef& def = *def_;
  LANTERN_CHECK(!sigma_views_.empty(), "field pipeline used before sync()");
  LANTERN_CHECK(def.conditioned() == (cond != nullptr),
                "field forward: conditioning context mismatch");
  const auto& k = kernels::ops<T>();
  FieldFwdCache<T> local;
  FieldFwdCache<T>& ws = cache ? *cache : local;
  ws.count = count;

  const int enc_w = def.pos_grid.feature_width();
  ws.x0.assign(count * def.sigma_in, T(0));
  if (def.variant == Variant::kGlo) {
    std::vector<T> enc(count * enc_w);
    grid_encode<T>(def.pos_grid, pos_tables_, pts, count, mask, enc.data());
    const int d_cond = def.cond->d_cond;
    for (std::size_t i = 0; i < count; ++i) {
      T* row = ws.x0.data() + i * def.sigma_in;
      std::memcpy(row, enc.data() + i * enc_w, enc_w * sizeof(T));
      std::memcpy(row + enc_w, cond->h_cond.data(), d_cond * sizeof(T));
    }
  } else {
    grid_encode<T>(def.pos_grid, pos_tables_, pts, count, mask, ws.x0.data());
  }

  const std::size_t n_sig = def.sigma_net.size();
  ws.pre_mod.assign(def.branches.size(), {});
  ws.pre_act.assign(n_sig, {});
  ws.act.assign(n_sig, {});
  const T* cur = ws.x0.data();
  std::vector<T> raw_out;
  for (std::size_t i = 0; i < n_sig; ++i) {
    const auto& lv = sigma_views_[i];
    std::vector<T> pre(count * lv.out);
    k.linear_forward(cur, count, lv.in, lv.w, lv.b, lv.out, pre.data());
    const bool hidden = i + 1 < n_sig;
    if (!hidden) {
      raw_out = std::move(pre);
      break;
    }
    const auto mod = std::find(def.modulated_layers.begin(),
                               def.modulated_layers.end(), int(i));
    if (mod != def.modulated_layers.end()) {
      const std::size_t bi = mod - def.modulated_layers.begin();
      ws.pre_mod[bi] = pre;
      const T* alpha = cond->alpha[bi].data();
      const T* beta = cond->beta[bi].data();
      for (std::size_t r = 0; r < count; ++r) {
        T* row = pre.data() + r * lv.out;
        k.affine_modulate(row, alpha, beta, row, lv.out);
      }
    }
    ws.pre_act[i] = std::move(pre);
    ws.act[i].assign(count * lv.out, T(0));
    k.relu(ws.pre_act[i].data(), ws.act[i].data(), ws.pre_act[i].size());
    cur = ws.act[i].data();
  }

  const int G = def.geom;
  ws.raw_sigma.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    ws.raw_sigma[i] = raw_out[i * (1 + G)];
    sigma[i] = static_cast<T>(
        density_activation(static_cast<double>(ws.raw_sigma[i])));
  }

  // Color head input: geometry features then the direction basis.
  const int cin = G + kDirEncodeWidth;
  ws.color_in.assign(count * cin, T(0));
  for (std::size_t i = 0; i < count; ++i) {
    T* row = ws.color_in.data() + i * cin;
    const T* geom = raw_out.data() + i * (1 + G) + 1;
    std::memcpy(row, geom, G * sizeof(T));
    const auto sh = dir_encode(dirs + i * 3);
    for (int j = 0; j < kDirEncodeWidth; ++j)
      row[G + j] = static_cast<T>(sh[j]);
  }

  const std::size_t n_col = def.color_net.size();
  ws.color_pre_act.assign(n_col, {});
  ws.color_act.assign(n_col, {});
  cur = ws.color_in.data();
  std::vector<T> logits;
  for (std::size_t i = 0; i < n_col; ++i) {
    const auto& lv = color_views_[i];
    std::vector<T> pre(count * lv.out);
    k.linear_forward(cur, count, lv.in, lv.w, lv.b, lv.out, pre.data());
    const bool hidden = i + 1 < n_col;
    if (!hidden) {
      logits = std::move(pre);
      break;
    }
    if (def.modulate_color && i == 0) {
      ws.color_pre_mod = pre;
      for (std::size_t r = 0; r < count; ++r) {
        T* row = pre.data() + r * lv.out;
        k.affine_modulate(row, cond->color_alpha.data(),
                          cond->color_beta.data(), row, lv.out);
      }
    }
    ws.color_pre_act[i] = std::move(pre);
    ws.color_act[i].assign(count * lv.out, T(0));
    k.relu(ws.color_pre_act[i].data(), ws.color_act[i].data(),
           ws.color_pre_act[i].size());
    cur = ws.color_act[i].data();
  }

  ws.rgb.resize(count * 3);
  for (std::size_t i = 0; i < count * 3; ++i) {
    ws.rgb[i] = static_cast<T>(sigmoid(static_cast<double>(logits[i])));
    rgb[i] = ws.rgb[i];
  }
}

template <class T>
void FieldPipeline<T>::forward_sigma(const double* pts, std::size_t count,
                                     const LevelMask& mask,
                                     const FrameCond<T>* cond,
                                     T* sigma) const {
  const FieldDef& def = *def_;
  LANTERN_CHECK(!sigma_views_.empty(), "field pipeline used before sync()");
  LANTERN_CHECK(def.conditioned() == (cond != nullptr),
                "field forward_sigma: conditioning context mismatch");
  const auto& k = kernels::ops<T>();

  const int enc_w = def.pos_grid.feature_width();
  std::vector<T> x0(count * def.sigma_in, T(0));
  if (def.variant == Variant::kGlo) {
    std::vector<T> enc(count * enc_w);
    grid_encode<T>(def.pos_grid, pos_tables_, pts, count, mask, enc.data());
    const int d_cond = def.cond->d_cond;
    for (std::size_t i = 0; i < count; ++i) {
      T* row = x0.data() + i * def.sigma_in;
      std::memcpy(row, enc.data() + i * enc_w, enc_w * sizeof(T));
      std::memcpy(row + enc_w, cond->h_cond.data(), d_cond * sizeof(T));
    }
  } else {
    grid_encode<T>(def.pos_grid, pos_tables_, pts, count, mask, x0.data());
  }

  const std::size_t n_sig = def.sigma_net.size();
  std::vector<T> cur = std::move(x0);
  for (std::size_t i = 0; i + 1 < n_sig; ++i) {
    const auto& lv = sigma_views_[i];
    std::vector<T> pre(count * lv.out);
    k.linear_forward(cur.data(), count, lv.in, lv.w, lv.b, lv.out, pre.data());
    const auto mod = std::find(def.modulated_layers.begin(),
                               def.modulated_layers.end(), int(i));
    if (mod != def.modulated_layers.end()) {
      const std::size_t bi = mod - def.modulated_layers.begin();
      for (std::size_t r = 0; r < count; ++r) {
        T* row = pre.data() + r * lv.out;
        k.affine_modulate(row, cond->alpha[bi].data(), cond->beta[bi].data(),
                          row, lv.out);
      }
    }
    cur.assign(pre.size(), T(0));
    k.relu(pre.data(), cur.data(), pre.size());
  }
  // Only the density row of the output layer.
  const auto& last = sigma_views_[n_sig - 1];
  std::vector<T> raw(count);
  k.linear_forward(cur.data(), count, last.in, last.w, last.b, 1, raw.data());
  for (std::size_t i = 0; i < count; ++i)
    sigma[i] =
        static_cast<T>(density_activation(static_cast<double>(raw[i])));
}

template <class T>
void FieldPipeline<T>::backward(const FieldFwdCache<T>& ws, const double* pts,
                                std::size_t count, const LevelMask& mask,
                                const FrameCond<T>* cond, const T* dsigma,
                                const T* drgb, FieldGradAcc<T>& acc) const {
  const FieldDef& def = *def_;
  LANTERN_CHECK(ws.count == count, "field backward: cache count mismatch");
  const auto& k = kernels::ops<T>();
  const int G = def.geom;

  // Through the rgb sigmoid.
  std::vector<T> delta(count * 3);
  for (std::size_t i = 0; i < count * 3; ++i) {
    const T s = ws.rgb[i];
    delta[i] = drgb[i] * s * (T(1) - s);
  }

  // Color head, output layer down to its input.
  std::vector<T> dcolor_in(count * (G + kDirEncodeWidth), T(0));
  const std::size_t n_col = def.color_net.size();
  for (std::size_t i = n_col; i-- > 0;) {
    const auto& lv = color_views_[i];
    const T* input =
        i == 0 ? ws.color_in.data() : ws.color_act[i - 1].data();
    std::vector<T> dinput(count * lv.in, T(0));
    k.linear_input_grad(delta.data(), count, lv.out, lv.w, lv.in,
                        dinput.data());
    k.linear_param_grad(input, delta.data(), count, lv.in, lv.out,
                        acc.color_w[i].data(), acc.color_b[i].data());
    if (i == 0) {
      dcolor_in = std::move(dinput);
      break;
    }
    std::vector<T> gated(count * lv.in, T(0));
    k.relu_backward(ws.color_pre_act[i - 1].data(), dinput.data(),
                    gated.data(), gated.size());
    if (def.modulate_color && i - 1 == 0) {
      const int w = color_views_[0].out;
      std::vector<T> dpre(count * w, T(0));
      for (std::size_t r = 0; r < count; ++r) {
        k.affine_modulate_backward(
            gated.data() + r * w, ws.color_pre_mod.data() + r * w,
            cond->color_beta.data(), dpre.data() + r * w,
            acc.color_dalpha.data(), acc.color_dbeta.data(), w);
      }
      gated = std::move(dpre);
    }
    delta = std::move(gated);
  }

  // Density activation and the sigma-net output row.
  std::vector<T> draw(count * (1 + G), T(0));
  for (std::size_t i = 0; i < count; ++i) {
    const double g =
        density_activation_grad(static_cast<double>(ws.raw_sigma[i]));
    draw[i * (1 + G)] = dsigma[i] * static_cast<T>(g);
    std::memcpy(draw.data() + i * (1 + G) + 1,
                dcolor_in.data() + i * (G + kDirEncodeWidth),
                G * sizeof(T));
  }

  // Sigma net.
  delta = std::move(draw);
  const std::size_t n_sig = def.sigma_net.size();
  std::vector<T> dx0;
  for (std::size_t i = n_sig; i-- > 0;) {
    const auto& lv = sigma_views_[i];
    const T* input = i == 0 ? ws.x0.data() : ws.act[i - 1].data();
    std::vector<T> dinput(count * lv.in, T(0));
    k.linear_input_grad(delta.data(), count, lv.out, lv.w, lv.in,
                        dinput.data());
    k.linear_param_grad(input, delta.data(), count, lv.in, lv.out,
                        acc.sigma_w[i].data(), acc.sigma_b[i].data());
    if (i == 0) {
      dx0 = std::move(dinput);
      break;
    }
    std::vector<T> gated(count * lv.in, T(0));
    k.relu_backward(ws.pre_act[i - 1].data(), dinput.data(), gated.data(),
                    gated.size());
    const auto mod = std::find(def.modulated_layers.begin(),
                               def.modulated_layers.end(), int(i - 1));
    if (mod != def.modulated_layers.end()) {
      const std::size_t bi = mod - def.modulated_layers.begin();
      const int w = sigma_views_[i - 1].out;
      std::vector<T> dpre(count * w, T(0));
      for (std::size_t r = 0; r < count; ++r) {
        k.affine_modulate_backward(gated.data() + r * w,
                                   ws.pre_mod[bi].data() + r * w,
                                   cond->beta[bi].data(), dpre.data() + r * w,
                                   acc.dalpha[bi].data(),
                                   acc.dbeta[bi].data(), w);
      }
      gated = std::move(dpre);
    }
    delta = std::move(gated);
  }

  // Split the input gradient between the positional encoding and, under
  // GLO, the shared conditional feature.
  const int enc_w = def.pos_grid.feature_width();
  std::vector<T*> gtables;
  gtables.reserve(acc.pos_tables.size());
  for (auto& t : acc.pos_tables) gtables.push_back(t.data());
  if (def.variant == Variant::kGlo) {
    const int d_cond = def.cond->d_cond;
    std::vector<T> denc(count * enc_w);
    for (std::size_t i = 0; i < count; ++i) {
      const T* row = dx0.data() + i * def.sigma_in;
      std::memcpy(denc.data() + i * enc_w, row, enc_w * sizeof(T));
      for (int j = 0; j < d_cond; ++j) acc.dh_cond[j] += row[enc_w + j];
    }
    grid_encode_backward<T>(def.pos_grid, pts, count, mask, denc.data(),
                            std::span<T* const>(gtables));
  } else {
    grid_encode_backward<T>(def.pos_grid, pts, count, mask, dx0.data(),
                            std::span<T* const>(gtables));
  }
}

template class FieldPipeline<double>;
template class FieldPipeline<float>;

void apply_field_grads(const FieldDef& def, const ParamStore& store,
                       const FrameContext* ctx, const FieldGradAcc<real>& acc,
                       GradBuffer& grads) {
  auto add_into = [&](std::size_t handle, const std::vector<real>& src) {
    auto dst = grads.grads(handle);
    LANTERN_CHECK(dst.size() == src.size(),
                  "apply_field_grads: shape mismatch");
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
  };
  for (std::size_t l = 0; l < def.pos_grid.handles.size(); ++l)
    add_into(def.pos_grid.handles[l], acc.pos_tables[l]);
  for (std::size_t i = 0; i < def.sigma_net.size(); ++i) {
    add_into(def.sigma_net[i].w_handle, acc.sigma_w[i]);
    add_into(def.sigma_net[i].b_handle, acc.sigma_b[i]);
  }
  for (std::size_t i = 0; i < def.color_net.size(); ++i) {
    add_into(def.color_net[i].w_handle, acc.color_w[i]);
    add_into(def.color_net[i].b_handle, acc.color_b[i]);
  }
  if (!def.conditioned()) return;
  LANTERN_CHECK(ctx != nullptr,
                "apply_field_grads: conditioned field needs a frame context");

  std::vector<real> dh_cond(def.cond->d_cond, real(0));
  for (std::size_t b = 0; b < def.branches.size(); ++b) {
    std::vector<real> dab(def.branches[b].out, real(0));
    std::copy(acc.dalpha[b].begin(), acc.dalpha[b].end(), dab.begin());
    std::copy(acc.dbeta[b].begin(), acc.dbeta[b].end(),
              dab.begin() + def.branches[b].out / 2);
    std::vector<real> dh(def.cond->d_cond, real(0));
    linear_backward(linear_view(def.branches[b], store), ctx->h_cond.data(),
                    dab.data(), 1, dh.data(),
                    grads.grads(def.branches[b].w_handle).data(),
                    grads.grads(def.branches[b].b_handle).data());
    for (int j = 0; j < def.cond->d_cond; ++j) dh_cond[j] += dh[j];
  }
  if (def.modulate_color) {
    std::vector<real> dab(def.color_branch.out, real(0));
    std::copy(acc.color_dalpha.begin(), acc.color_dalpha.end(), dab.begin());
    std::copy(acc.color_dbeta.begin(), acc.color_dbeta.end(),
              dab.begin() + def.color_branch.out / 2);
    std::vector<real> dh(def.cond->d_cond, real(0));
    linear_backward(linear_view(def.color_branch, store), ctx->h_cond.data(),
                    dab.data(), 1, dh.data(),
                    grads.grads(def.color_branch.w_handle).data(),
                    grads.grads(def.color_branch.b_handle).data());
    for (int j = 0; j < def.cond->d_cond; ++j) dh_cond[j] += dh[j];
  }
  if (def.variant == Variant::kGlo) {
    for (int j = 0; j < def.cond->d_cond; ++j) dh_cond[j] += acc.dh_cond[j];
  }
  cond_encoder_backward(*def.cond, store, ctx->cond_cache, dh_cond, grads);
}

FieldOutput eval_field(const FieldDef& def, const ParamStore& store,
                       const double x[3], const double d[3],
                       const FrameContext* ctx, const LevelMask& mask) {
  for (int k = 0; k < 3; ++k)
    LANTERN_CHECK(std::isfinite(x[k]) && x[k] >= -1e-6 && x[k] <= 1.0 + 1e-6,
                  "eval_field: point outside the unit cube");
  FieldPipeline<real> pipe(def);
  pipe.sync(store);
  FrameCond<real> cond;
  const FrameCond<real>* cond_ptr = nullptr;
  if (def.conditioned()) {
    LANTERN_CHECK(ctx != nullptr,
                  "eval_field: conditioned field needs a frame context");
    cond = make_frame_cond<real>(def, store, *ctx);
    cond_ptr = &cond;
  }
  FieldFwdCache<real> cache;
  FieldOutput out;
  real sigma;
  real rgb[3];
  pipe.forward(x, d, 1, mask, cond_ptr, &sigma, rgb, &cache);
  out.sigma = sigma;
  out.rgb = {rgb[0], rgb[1], rgb[2]};
  out.geom.resize(def.geom);
  // Geometry features are the color-head input before the direction basis.
  for (int j = 0; j < def.geom; ++j) out.geom[j] = cache.color_in[j];
  return out;
}

}  // namespace lantern

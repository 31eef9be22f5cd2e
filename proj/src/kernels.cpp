#include "lantern/kernels.hpp"

#include "lantern/common.hpp"

namespace lantern::kernels {
namespace {

Backend g_backend = avx2_supported() ? Backend::kAvx2 : Backend::kScalar;

}  // namespace

const Ops<double>& ops_f64() {
  if (g_backend == Backend::kAvx2) {
    if (const Ops<double>* o = avx2_ops_f64()) return *o;
  }
  return scalar_ops_f64();
}

const Ops<float>& ops_f32() {
  if (g_backend == Backend::kAvx2) {
    if (const Ops<float>* o = avx2_ops_f32()) return *o;
  }
  return scalar_ops_f32();
}

void select_backend(Backend b) {
  if (b == Backend::kAvx2 && !avx2_supported())
    throw ValidationError("kernel backend avx2 not supported on this CPU");
  g_backend = b;
}

Backend active_backend() { return g_backend; }

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace lantern::kernels

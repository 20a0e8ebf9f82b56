#include "seqmatch/kernels.hpp"

#include <atomic>
#include <cstdlib>

#include "seqmatch/errors.hpp"

namespace seqmatch::kernels {

const Ops* avx2_ops_impl();  // defined in kernels_avx2.cpp

const Ops* avx2_ops() { return avx2_ops_impl(); }

namespace {

const Ops* resolve(const std::string& name) {
  if (name == "scalar") return &scalar_ops();
  if (name == "avx2") {
    const Ops* ops = avx2_ops();
    if (!ops) throw ArgumentError("kernel variant 'avx2' is not available on this CPU");
    return ops;
  }
  if (name == "auto" || name.empty()) {
    const Ops* ops = avx2_ops();
    return ops ? ops : &scalar_ops();
  }
  throw ArgumentError("unknown kernel variant '" + name + "' (expected scalar, avx2 or auto)");
}

std::atomic<const Ops*> g_active{nullptr};

const Ops* init_active() {
  const char* env = std::getenv("SEQMATCH_KERNELS");
  return resolve(env ? std::string(env) : "auto");
}

}  // namespace

const Ops& active() {
  const Ops* ops = g_active.load(std::memory_order_acquire);
  if (!ops) {
    ops = init_active();
    g_active.store(ops, std::memory_order_release);
  }
  return *ops;
}

void select(const std::string& name) {
  g_active.store(resolve(name), std::memory_order_release);
}

}  // namespace seqmatch::kernels

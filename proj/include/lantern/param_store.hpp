#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lantern/common.hpp"

namespace lantern {

// Learning-rate group of a parameter entry. Grid entries follow the sparse
// high-lr regime; everything else uses the mlp group.
enum class LrGroup { kGridEntries, kMlp };

struct ParamEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<real> values;
  LrGroup group = LrGroup::kMlp;
  bool weight_decay_eligible = false;
};

// Owns every trainable value in the engine. Modules hold entry handles and
// view the flat arrays; nothing trainable lives outside the store.
class ParamStore {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape,
                  LrGroup group, bool weight_decay_eligible);

  std::size_t count() const { return entries_.size(); }
  const ParamEntry& entry(std::size_t h) const { return entries_.at(h); }
  ParamEntry& entry(std::size_t h) { return entries_.at(h); }
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t handle(const std::string& name) const;

  std::span<const real> values(std::size_t h) const {
    return entries_.at(h).values;
  }
  std::span<real> values(std::size_t h) { return entries_.at(h).values; }

  std::size_t total_values() const;

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Per-entry gradient arrays, shape-congruent with a ParamStore. Reset to
// zero between optimizer steps by the caller.
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(const ParamStore& store);

  void reset();
  std::span<real> grads(std::size_t h) { return grads_.at(h); }
  std::span<const real> grads(std::size_t h) const { return grads_.at(h); }
  std::size_t count() const { return grads_.size(); }

  // Fixed-order merge: callers add worker buffers in worker-index order so
  // the reduction is reproducible.
  void add_from(const GradBuffer& other);

 private:
  std::vector<std::vector<real>> grads_;
};

}  // namespace lantern

#include "lantern/param_store.hpp"

namespace lantern {

std::size_t ParamStore::add(std::string name, std::vector<std::size_t> shape,
                            LrGroup group, bool weight_decay_eligible) {
  LANTERN_CHECK(!name.empty(), "parameter name must be non-empty");
  LANTERN_CHECK(index_.count(name) == 0, "duplicate parameter name: ", name);
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  LANTERN_CHECK(n > 0, "parameter '", name, "' has an empty shape");
  ParamEntry e;
  e.name = std::move(name);
  e.shape = std::move(shape);
  e.values.assign(n, real(0));
  e.group = group;
  e.weight_decay_eligible = weight_decay_eligible;
  const std::size_t h = entries_.size();
  index_.emplace(e.name, h);
  entries_.push_back(std::move(e));
  return h;
}

std::size_t ParamStore::handle(const std::string& name) const {
  auto it = index_.find(name);
  LANTERN_CHECK(it != index_.end(), "unknown parameter: ", name);
  return it->second;
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.values.size();
  return n;
}

GradBuffer::GradBuffer(const ParamStore& store) {
  grads_.resize(store.count());
  for (std::size_t h = 0; h < store.count(); ++h)
    grads_[h].assign(store.entry(h).values.size(), real(0));
}

void GradBuffer::reset() {
  for (auto& g : grads_) std::fill(g.begin(), g.end(), real(0));
}

void GradBuffer::add_from(const GradBuffer& other) {
  LANTERN_CHECK(other.grads_.size() == grads_.size(),
                "gradient buffer merge: entry count mismatch");
  for (std::size_t h = 0; h < grads_.size(); ++h) {
    LANTERN_CHECK(other.grads_[h].size() == grads_[h].size(),
                  "gradient buffer merge: shape mismatch at entry ", h);
    for (std::size_t i = 0; i < grads_[h].size(); ++i)
      grads_[h][i] += other.grads_[h][i];
  }
}

}  // namespace lantern

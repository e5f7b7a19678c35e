#include "spd/autodiff/parameters.hpp"

#include "spd/errors.hpp"

namespace spd::ad {

ParamId ParameterStore::add(std::string name, Tensor value, bool trainable) {
  require(!find(name).has_value(), "duplicate parameter name: " + name);
  require(value.all_finite(), "parameter initialised with non-finite values: " + name);
  entries_.push_back({std::move(name), std::move(value), trainable});
  return entries_.size() - 1;
}

std::optional<ParamId> ParameterStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<ParamId> ParameterStore::trainable_ids() const {
  std::vector<ParamId> ids;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].trainable) ids.push_back(i);
  }
  return ids;
}

std::size_t ParameterStore::trainable_scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable) n += e.value.numel();
  }
  return n;
}

}  // namespace spd::ad

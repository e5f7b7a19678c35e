#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spd/autodiff/tensor.hpp"

namespace spd::ad {

using ParamId = std::size_t;

/// Owns every named tensor of a model, trainable or frozen.
///
/// Ids are dense and assigned in insertion order, so two stores built by the
/// same construction code agree on ids and names.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor value, bool trainable = true);

  std::size_t size() const { return entries_.size(); }
  const std::string& name(ParamId id) const { return entries_.at(id).name; }
  Tensor& value(ParamId id) { return entries_.at(id).value; }
  const Tensor& value(ParamId id) const { return entries_.at(id).value; }
  bool trainable(ParamId id) const { return entries_.at(id).trainable; }

  std::optional<ParamId> find(std::string_view name) const;
  std::vector<ParamId> trainable_ids() const;

  // Number of trainable scalars; frozen tensors are excluded.
  std::size_t trainable_scalar_count() const;

 private:
  struct Entry {
    std::string name;
    Tensor value;
    bool trainable;
  };
  std::vector<Entry> entries_;
};

// Gradient per trainable parameter.
using GradMap = std::map<ParamId, Tensor>;

}  // namespace spd::ad

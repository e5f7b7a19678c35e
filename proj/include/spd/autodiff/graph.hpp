#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spd/autodiff/parameters.hpp"
#include "spd/autodiff/tensor.hpp"

namespace spd::ad {

class Graph;

/// Handle to one node of a Graph.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Receives the adjoint of the node's output and accumulates (+=) into the
// adjoints of its inputs. An entry is null when that input needs no gradient.
using BackwardFn = std::function<void(const Tensor& out_grad, std::span<Tensor* const> in_grads)>;

/// Tape of operations recorded in topological order.
///
/// Nodes are appended as ops are applied, so every input id precedes its
/// consumer. Parameter leaves reference the ParameterStore's tensors directly;
/// the store must outlive the graph and must not change while it is in use.
/// With recording off, backward closures are dropped (inference mode).
class Graph {
 public:
  explicit Graph(const ParameterStore* params = nullptr, bool record = true);

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Leaf for a stored parameter; repeated calls with the same id share a node.
  Var param(ParamId id);

  // Appends an op node. Throws NumericError naming `op` if the value is not finite.
  Var record(std::string op, std::span<const Var> inputs, Tensor value, BackwardFn backward);
  Var record(std::string op, std::initializer_list<Var> inputs, Tensor value, BackwardFn backward) {
    return record(std::move(op), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(value), std::move(backward));
  }

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const;
  const std::string& op(std::size_t id) const { return nodes_.at(id).op; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  bool recording() const { return record_; }
  const ParameterStore* params() const { return params_; }

  Var var(std::size_t id) { return Var(this, id); }

 private:
  friend GradMap grad(const Graph& graph, Var loss);

  struct Node {
    std::string op;
    std::vector<std::size_t> inputs;
    Tensor owned;
    const Tensor* external = nullptr;
    BackwardFn backward;
    std::optional<ParamId> param;
    bool requires_grad = false;
  };

  const ParameterStore* params_;
  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<ParamId, std::size_t> param_nodes_;
};

/// Reverse-mode gradients of a scalar `loss` for every trainable parameter
/// of the graph's store. Parameters that do not reach the loss get zeros.
/// Forward values are left untouched.
GradMap grad(const Graph& graph, Var loss);

}  // namespace spd::ad

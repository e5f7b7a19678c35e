#include "spd/autodiff/graph.hpp"

#include "spd/errors.hpp"

namespace spd::ad {

const Tensor& Var::value() const {
  require(graph_ != nullptr, "use of an unbound Var");
  return graph_->value(id_);
}

Graph::Graph(const ParameterStore* params, bool record) : params_(params), record_(record) {}

const Tensor& Graph::value(std::size_t id) const {
  const Node& node = nodes_.at(id);
  return node.external != nullptr ? *node.external : node.owned;
}

Var Graph::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite value in constant input");
  Node node;
  node.op = "constant";
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(ParamId id) {
  require(params_ != nullptr, "graph has no parameter store");
  if (auto it = param_nodes_.find(id); it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.op = "param:" + params_->name(id);
  node.external = &params_->value(id);
  node.param = id;
  node.requires_grad = record_ && params_->trainable(id);
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(id, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(std::string op, std::span<const Var> inputs, Tensor value, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError("non-finite value produced by op '" + op + "'");
  Node node;
  node.op = std::move(op);
  node.owned = std::move(value);
  for (const Var& in : inputs) {
    require(in.graph() == this, "op input belongs to a different graph");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  node.requires_grad = node.requires_grad && record_;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

GradMap grad(const Graph& graph, Var loss) {
  require(loss.graph() == &graph, "loss node belongs to a different graph");
  require(graph.record_, "graph was built without recording");
  const Tensor& loss_value = graph.value(loss.id());
  require(loss_value.numel() == 1,
          "loss must be a scalar, got shape " + shape_string(loss_value.shape()));

  std::vector<std::optional<Tensor>> adjoint(graph.nodes_.size());
  adjoint[loss.id()] = Tensor(loss_value.shape(), 1.0);

  GradMap out;
  std::vector<Tensor*> in_grads;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    const Graph::Node& node = graph.nodes_[id];
    if (!adjoint[id].has_value() || !node.requires_grad) continue;
    if (node.param.has_value()) {
      auto [it, inserted] = out.try_emplace(*node.param, *adjoint[id]);
      if (!inserted) it->second += *adjoint[id];
      continue;
    }
    if (!node.backward) continue;
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      if (!graph.nodes_[in].requires_grad) {
        in_grads.push_back(nullptr);
        continue;
      }
      if (!adjoint[in].has_value()) adjoint[in] = Tensor::zeros_like(graph.value(in));
      in_grads.push_back(&*adjoint[in]);
    }
    node.backward(*adjoint[id], in_grads);
    for (Tensor* g : in_grads) {
      if (g != nullptr && !g->all_finite()) {
        throw NumericError("non-finite gradient in backward of op '" + node.op + "'");
      }
    }
    adjoint[id].reset();
  }

  if (graph.params_ != nullptr) {
    for (ParamId id : graph.params_->trainable_ids()) {
      if (!out.contains(id)) out.emplace(id, Tensor::zeros_like(graph.params_->value(id)));
    }
  }
  return out;
}

}  // namespace spd::ad

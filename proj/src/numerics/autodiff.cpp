#include "eqnet/numerics/autodiff.hpp"

#include <unordered_set>
#include <utility>

#include "eqnet/errors.hpp"

namespace eqnet::numerics {

Tape Tape::record(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward on an undefined tensor");
  if (loss.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_string(loss.shape()));
  }
  Tape tape;
  std::unordered_set<const detail::Node*> visited;
  // Iterative post-order DFS; (node, next input to visit).
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  if (loss.node()->backward) {
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
  }
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      auto* child = node->inputs[next++].get();
      if (child->backward && visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    tape.ops_.push_back(node);
    stack.pop_back();
  }
  tape.root_ = loss.node();
  return tape;
}

void Tape::replay(const Tensor& loss) {
  if (consumed_) throw ContractError("tape already replayed");
  consumed_ = true;
  if (loss.node() != root_) throw ContractError("tape replayed with a different loss");
  root_->grad_data()[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    auto& node = **it;
    if (node.grad.empty()) continue;  // no gradient reached this node
    node.backward(node);
  }
  // Unlink inputs-first so each destruction only drops already-unlinked nodes
  // and never recurses through long chains.
  for (auto* op : ops_) {
    op->backward = nullptr;
    op->inputs.clear();
  }
  ops_.clear();
  root_.reset();
}

void backward(const Tensor& loss) {
  auto tape = Tape::record(loss);
  tape.replay(loss);
}

}  // namespace eqnet::numerics

#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "eqnet/numerics/tensor.hpp"

namespace eqnet::numerics {

// Ordered record of the primitive ops that produced a loss, in an order where
// every op appears after the ops producing its inputs.
//
// Tapes are single use: replay() runs reverse accumulation once and then
// releases the recorded closures and input links of interior nodes, so the
// forward graph is freed and a second replay is a contract error.
class Tape {
 public:
  static Tape record(const Tensor& loss);

  std::size_t size() const noexcept { return ops_.size(); }
  void replay(const Tensor& loss);

 private:
  // Interior nodes are owned through root_'s input links until replay.
  std::vector<detail::Node*> ops_;
  std::shared_ptr<detail::Node> root_;
  bool consumed_ = false;
};

// d(loss)/d(t) accumulated into every requires_grad ancestor t of loss.
// Leaf gradients accumulate across calls until zeroed.
void backward(const Tensor& loss);

}  // namespace eqnet::numerics

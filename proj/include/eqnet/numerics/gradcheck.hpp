#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eqnet/numerics/param_store.hpp"
#include "eqnet/numerics/tensor.hpp"

namespace eqnet::numerics {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor);
  // the floor keeps entries whose true gradient is ~0 from dividing noise by
  // noise.
  double denominator_floor = 1e-6;
  // Fault injection: scale the analytic gradient of the largest-magnitude
  // entry of this parameter before comparing.
  std::optional<std::string> corrupt_param;
  double corrupt_factor = 1.1;
};

struct ParamGradResult {
  std::string name;
  std::size_t count = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamGradResult> params;
  double max_rel_error = 0.0;
  bool passed() const;
};

using NamedTensor = std::pair<std::string, Tensor>;

// Compares reverse-mode gradients of the scalar-valued `f` against central
// differences (f(p+h) - f(p-h)) / 2h for every element of every parameter.
// Throws OracleInvalidError if two unperturbed evaluations of f differ.
GradCheckReport finite_difference_check(const std::function<Tensor()>& f,
                                        const std::vector<NamedTensor>& params,
                                        const GradCheckOptions& options = {});

GradCheckReport finite_difference_check(const std::function<Tensor()>& f,
                                        const ParamStore& store,
                                        const GradCheckOptions& options = {});

}  // namespace eqnet::numerics

#include "eqnet/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "eqnet/errors.hpp"
#include "eqnet/numerics/autodiff.hpp"

namespace eqnet::numerics {

bool GradCheckReport::passed() const {
  return std::all_of(params.begin(), params.end(), [](const auto& p) { return p.passed; });
}

namespace {

double evaluate(const std::function<Tensor()>& f) {
  NoGradGuard guard;
  const Tensor out = f();
  if (out.size() != 1) throw ContractError("gradient check: f must return a scalar");
  return out.item();
}

}  // namespace

GradCheckReport finite_difference_check(const std::function<Tensor()>& f,
                                        const std::vector<NamedTensor>& params,
                                        const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw ValidationError("gradient check: step must be positive");

  for (const auto& [_, p] : params) p.node()->grad = Buffer();
  {
    const Tensor loss = f();
    backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, p] : params) {
    if (p.has_grad()) analytic.emplace_back(p.grad().begin(), p.grad().end());
    else analytic.emplace_back(p.size(), 0.0);
  }

  const double base = evaluate(f);
  if (evaluate(f) != base) {
    throw OracleInvalidError("gradient check: f is not deterministic");
  }

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& [name, param] = params[k];
    auto& grads = analytic[k];
    if (options.corrupt_param && *options.corrupt_param == name && !grads.empty()) {
      auto it = std::max_element(grads.begin(), grads.end(),
                                 [](double a, double b) { return std::abs(a) < std::abs(b); });
      *it *= options.corrupt_factor;
    }
    ParamGradResult r;
    r.name = name;
    r.count = param.size();
    // Perturb through the node directly; parameters are leaves.
    auto& values = param.node()->value;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double fp = evaluate(f);
      values[i] = saved - options.step;
      const double fm = evaluate(f);
      values[i] = saved;
      const double numeric = (fp - fm) / (2.0 * options.step);
      const double abs_err = std::abs(grads[i] - numeric);
      const double denom =
          std::max({std::abs(grads[i]), std::abs(numeric), options.denominator_floor});
      const double rel = abs_err / denom;
      r.max_abs_error = std::max(r.max_abs_error, abs_err);
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst_index = i;
      }
    }
    r.passed = r.max_rel_error < options.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, r.max_rel_error);
    report.params.push_back(std::move(r));
  }
  return report;
}

GradCheckReport finite_difference_check(const std::function<Tensor()>& f,
                                        const ParamStore& store,
                                        const GradCheckOptions& options) {
  std::vector<NamedTensor> params;
  for (const auto& [name, e] : store.entries()) params.emplace_back(name, e.param);
  return finite_difference_check(f, params, options);
}

}  // namespace eqnet::numerics

#include "racnn/optim.hpp"

#include <set>
#include <stdexcept>

namespace racnn {

void validate_groups(const std::vector<ParamGroup>& groups) {
  std::set<const detail::TensorNode*> seen;
  for (const ParamGroup& g : groups) {
    if (g.lr_mult < 0 || g.wd_mult < 0)
      throw std::invalid_argument("param group '" + g.name + "' has negative multiplier");
    for (const Tensor& p : g.params) {
      if (!p.requires_grad())
        throw std::invalid_argument("param group '" + g.name +
                                    "' contains a tensor without requires_grad");
      if (!seen.insert(p.node().get()).second)
        throw std::invalid_argument("tensor appears in more than one param group ('" +
                                    g.name + "')");
    }
  }
}

SgdOptimizer::SgdOptimizer(std::vector<ParamGroup> groups, SgdConfig cfg)
    : groups_(std::move(groups)), cfg_(cfg) {
  validate_groups(groups_);
  velocity_.resize(groups_.size());
  for (size_t g = 0; g < groups_.size(); ++g) {
    velocity_[g].resize(groups_[g].params.size());
    for (size_t p = 0; p < groups_[g].params.size(); ++p) {
      velocity_[g][p].assign(static_cast<size_t>(groups_[g].params[p].numel()), 0.0);
    }
  }
}

void SgdOptimizer::step() {
  for (size_t g = 0; g < groups_.size(); ++g) {
    ParamGroup& grp = groups_[g];
    if (grp.lr_mult == 0.0 && grp.wd_mult == 0.0) continue;  // frozen
    const double eff_lr = cfg_.base_lr * grp.lr_mult;
    const double eff_wd = cfg_.base_wd * grp.wd_mult;
    for (size_t p = 0; p < grp.params.size(); ++p) {
      Tensor& param = grp.params[p];
      if (!param.has_grad())
        throw std::runtime_error("sgd step: parameter in group '" + grp.name +
                                 "' has no gradient");
      std::vector<double>& v = velocity_[g][p];
      double* w = param.data();
      const double* dw = param.grad();
      const int64_t n = param.numel();
      for (int64_t i = 0; i < n; ++i) {
        v[static_cast<size_t>(i)] = cfg_.momentum * v[static_cast<size_t>(i)] -
                                    eff_lr * (dw[i] + eff_wd * w[i]);
        w[i] += v[static_cast<size_t>(i)];
      }
    }
  }
}

void SgdOptimizer::zero_grad() {
  for (ParamGroup& grp : groups_) {
    for (Tensor& param : grp.params) param.zero_grad();
  }
}

}  // namespace racnn

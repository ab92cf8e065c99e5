#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "racnn/tensor.hpp"

namespace racnn {

// Named set of parameters sharing learning-rate and weight-decay multipliers.
struct ParamGroup {
  std::string name;
  std::vector<Tensor> params;
  double lr_mult = 1.0;
  double wd_mult = 1.0;
};

struct SgdConfig {
  double base_lr = 0.001;
  double base_wd = 0.0005;
  double momentum = 0.9;
  uint64_t seed = 0;
};

// SGD with momentum over parameter groups:
//   v <- momentum * v - eff_lr * (grad + eff_wd * param)
//   param <- param + v
// where eff_lr = base_lr * lr_mult and eff_wd = base_wd * wd_mult.
// Groups with lr_mult == 0 and wd_mult == 0 are skipped entirely, so frozen
// parameters stay bit-identical.
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<ParamGroup> groups, SgdConfig cfg);

  void step();
  void zero_grad();

  const std::vector<ParamGroup>& groups() const { return groups_; }
  std::vector<ParamGroup>& groups() { return groups_; }
  const SgdConfig& config() const { return cfg_; }

 private:
  std::vector<ParamGroup> groups_;
  SgdConfig cfg_;
  // velocity buffers, aligned with groups_[g].params[p]
  std::vector<std::vector<std::vector<double>>> velocity_;
};

// Throws std::invalid_argument unless every param requires grad and no tensor
// appears in two groups.
void validate_groups(const std::vector<ParamGroup>& groups);

}  // namespace racnn

#pragma once

#include <vector>

#include "gvfl/dense_matrix.hpp"

namespace gvfl {

/// Adam with bias correction over a fixed list of parameter matrices.
/// Moment buffers are lazily shaped on the first step.
class AdamOptimizer {
 public:
  struct Config {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  AdamOptimizer() = default;
  explicit AdamOptimizer(Config cfg) : cfg_(cfg) {}

  /// One update over aligned parameter/gradient lists.
  void step(std::vector<DenseMatrix*> params,
            const std::vector<const DenseMatrix*>& grads);

  long steps_taken() const { return step_; }
  const Config& config() const { return cfg_; }

 private:
  Config cfg_;
  long step_ = 0;
  std::vector<DenseMatrix> m_;
  std::vector<DenseMatrix> v_;
};

}  // namespace gvfl

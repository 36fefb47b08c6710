#include "gvfl/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace gvfl {

void AdamOptimizer::step(std::vector<DenseMatrix*> params,
                         const std::vector<const DenseMatrix*>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam: params/grads length mismatch");
  if (m_.empty()) {
    for (const DenseMatrix* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  if (m_.size() != params.size())
    throw std::invalid_argument("adam: parameter list changed size");
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    DenseMatrix& p = *params[i];
    const DenseMatrix& g = *grads[i];
    if (!p.same_shape(g) || !p.same_shape(m_[i]))
      throw std::invalid_argument("adam: shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      double& m = m_[i].data()[j];
      double& v = v_[i].data()[j];
      const double gj = g.data()[j];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * gj;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * gj * gj;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p.data()[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

}  // namespace gvfl

#include "tomsyn/neural/optim.hpp"

#include <cmath>

namespace tomsyn::neural {

template <typename T>
void add_l1_l2(Param<T>& p, double lambda1, double lambda2) {
  if (!p.decay) return;
  for (std::size_t i = 0; i < p.w.size(); ++i) {
    const double w = p.w[i];
    const double sign = w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
    p.g[i] += static_cast<T>(lambda1 * sign + 2.0 * lambda2 * w);
  }
}

template <typename T>
Adam<T>::Adam(std::vector<Param<T>*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  for (const Param<T>* p : params_) {
    m_.emplace_back(p->w.size(), T(0));
    v_.emplace_back(p->w.size(), T(0));
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Param<T>& p = *params_[pi];
    add_l1_l2(p, cfg_.l1, cfg_.l2);
    std::vector<T>& m = m_[pi];
    std::vector<T>& v = v_[pi];
    for (std::size_t i = 0; i < p.w.size(); ++i) {
      const double g = p.g[i];
      const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      p.w[i] -= static_cast<T>(lr * (mi / bc1) /
                               (std::sqrt(vi / bc2) + cfg_.eps));
    }
    p.zero_grad();
  }
}

double LrSchedule::at(int epoch) const {
  double lr = base_lr;
  for (int m : milestones) {
    if (epoch > m) lr *= gamma;
  }
  return lr;
}

template void add_l1_l2<float>(Param<float>&, double, double);
template void add_l1_l2<double>(Param<double>&, double, double);
template class Adam<float>;
template class Adam<double>;

}  // namespace tomsyn::neural

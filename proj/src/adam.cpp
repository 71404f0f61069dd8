#include "cocoa/adam.hpp"

#include <cmath>

namespace cocoa {

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw ShapeError("Adam step size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < m_.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + cfg_.eps);
    }
}

double cosine_lr(double lr0, long t, long total) {
    if (total <= 0) throw DomainError("cosine schedule needs a positive horizon");
    if (t < 0 || t >= total) throw DomainError("cosine schedule step out of range");
    return lr0 * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(t) / static_cast<double>(total)));
}

}  // namespace cocoa

#pragma once

#include <cmath>
#include <vector>

namespace previz {

/// Adam with decoupled weight decay over a small parameter vector.
class AdamW {
public:
    struct Options {
        double learning_rate = 5e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
        double weight_decay = 0.0;
    };

    AdamW(size_t dim, const Options& options)
        : opts_(options), m_(dim, 0.0), v_(dim, 0.0) {}

    /// In-place update of `params` from `grad`.
    void step(std::vector<double>& params, const std::vector<double>& grad) {
        ++t_;
        const double bc1 = 1.0 - std::pow(opts_.beta1, t_);
        const double bc2 = 1.0 - std::pow(opts_.beta2, t_);
        for (size_t i = 0; i < params.size(); ++i) {
            m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * grad[i];
            v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * grad[i] * grad[i];
            const double m_hat = m_[i] / bc1;
            const double v_hat = v_[i] / bc2;
            params[i] -= opts_.learning_rate *
                         (m_hat / (std::sqrt(v_hat) + opts_.epsilon) +
                          opts_.weight_decay * params[i]);
        }
    }

private:
    Options opts_;
    std::vector<double> m_, v_;
    int64_t t_ = 0;
};

}  // namespace previz

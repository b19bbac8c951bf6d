#ifndef AIRTIME_ADAM_HPP
#define AIRTIME_ADAM_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "airtime/tensor.hpp"

namespace airtime::nn {

/// A named trainable tensor. Names are unique within a model and are the
/// keys used by checkpoints and the optimizer.
struct Parameter {
    std::string name;
    Var var;

    Tensor& value() { return var->value; }
    const Tensor& value() const { return var->value; }
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are keyed by parameter index;
/// the parameter list must be the same (same order, same shapes) on every
/// step.
class Adam {
public:
    explicit Adam(AdamConfig config) : cfg_(config) {}

    const AdamConfig& config() const { return cfg_; }
    std::uint64_t step_count() const { return step_; }

    void zero_grad(std::vector<Parameter>& params) const {
        for (Parameter& p : params) {
            p.var->grad_ready = false;
            p.var->grad = Tensor();
        }
    }

    /// One update. Every trainable parameter must carry a populated gradient
    /// buffer (a zero gradient is fine; a missing one is a usage error).
    void step(std::vector<Parameter>& params) {
        if (m_.empty()) {
            for (const Parameter& p : params) {
                m_.emplace_back(p.var->value.rows(), p.var->value.cols());
                v_.emplace_back(p.var->value.rows(), p.var->value.cols());
            }
        }
        if (m_.size() != params.size()) throw UsageError("adam_step: parameter list changed size");
        for (const Parameter& p : params) {
            if (!p.var->grad_ready) throw UsageError("adam_step: missing gradient for parameter '" + p.name + "'");
        }
        ++step_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& w = params[i].var->value;
            const Tensor& g = params[i].var->grad;
            if (!w.same_shape(m_[i])) throw UsageError("adam_step: parameter shape changed");
            for (std::size_t k = 0; k < w.numel(); ++k) {
                m_[i].at(k) = cfg_.beta1 * m_[i].at(k) + (1.0 - cfg_.beta1) * g.at(k);
                v_[i].at(k) = cfg_.beta2 * v_[i].at(k) + (1.0 - cfg_.beta2) * g.at(k) * g.at(k);
                const double mhat = m_[i].at(k) / bc1;
                const double vhat = v_[i].at(k) / bc2;
                w.at(k) -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

private:
    AdamConfig cfg_;
    std::uint64_t step_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

} // namespace airtime::nn

#endif

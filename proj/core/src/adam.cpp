#include "defgoal/adam.hpp"

#include "defgoal/errors.hpp"

#include <cmath>

namespace defgoal {

AdamState AdamState::init(const std::vector<Tensor*>& params, const AdamConfig& config) {
    AdamState s;
    s.config = config;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor* p : params) {
        s.m.emplace_back(p->values.size(), 0.0);
        s.v.emplace_back(p->values.size(), 0.0);
    }
    return s;
}

void adam_step(std::vector<Tensor*>& params, const std::vector<std::vector<double>>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeError("adam_step: parameter/gradient/state count mismatch");

    const AdamConfig& c = state.config;
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));

    for (size_t t = 0; t < params.size(); ++t) {
        Tensor& p = *params[t];
        const std::vector<double>& g = grads[t];
        if (g.size() != p.values.size())
            throw ShapeError("adam_step: gradient size mismatch for tensor " + std::to_string(t));
        std::vector<double>& m = state.m[t];
        std::vector<double>& v = state.v[t];
        for (size_t i = 0; i < g.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p.values[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
        }
    }
}

}  // namespace defgoal

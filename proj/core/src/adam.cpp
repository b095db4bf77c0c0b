#include "darnet/adam.hpp"

#include <cmath>

#include "darnet/error.hpp"

namespace darnet {

template <typename T>
void adam_step(std::span<Var<T>> params, AdamState<T>& state, double lr)
{
    if (state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.shape());
            state.second_moment.emplace_back(p.shape());
        }
    }
    if (state.first_moment.size() != params.size())
        throw ShapeError("Adam state tracks " + std::to_string(state.first_moment.size()) + " parameters, got " +
                         std::to_string(params.size()));

    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Var<T>& p = params[k];
        Tensor<T>& m = state.first_moment[k];
        Tensor<T>& v = state.second_moment[k];
        if (m.shape() != p.shape())
            throw ShapeError("Adam moment shape " + shape_string(m.shape()) + " differs from parameter " +
                             shape_string(p.shape()));
        const Tensor<T>& g = p.node()->grad;
        if (g.shape() != p.shape())
            continue; // no gradient reached this parameter
        Tensor<T>& w = p.mutable_value();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g[i];
            const double mi = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
            const double vi = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            w[i] = static_cast<T>(w[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + state.epsilon));
        }
    }
}

template <typename T>
void zero_grads(std::span<Var<T>> params)
{
    for (auto& p : params)
        p.zero_grad();
}

template void adam_step(std::span<Var<float>>, AdamState<float>&, double);
template void adam_step(std::span<Var<double>>, AdamState<double>&, double);
template void zero_grads(std::span<Var<float>>);
template void zero_grads(std::span<Var<double>>);

} // namespace darnet

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgl/encoder.hpp"
#include "mgl/matrix.hpp"

namespace mgl {

// Adam moment buffers for one encoder. The step counter t lives here, so
// every encoder keeps its own schedule.
struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<DenseMatrix> m_weights, v_weights;
    std::vector<std::vector<double>> m_biases, v_biases;
};

inline AdamState adam_init(const MlpEncoder& enc, double lr) {
    AdamState s;
    s.lr = lr;
    for (int l = 0; l < enc.num_layers(); ++l) {
        const DenseMatrix& w = enc.weights[static_cast<std::size_t>(l)];
        s.m_weights.emplace_back(w.rows, w.cols);
        s.v_weights.emplace_back(w.rows, w.cols);
        const std::size_t nb = enc.biases[static_cast<std::size_t>(l)].size();
        s.m_biases.emplace_back(nb, 0.0);
        s.v_biases.emplace_back(nb, 0.0);
    }
    return s;
}

namespace detail {

inline void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                        const AdamState& s, double bc1, double bc2, const std::string& block) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(g[i]))
            throw std::runtime_error("adam_step: non-finite gradient in " + block);
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

}  // namespace detail

// One Adam update over every weight and bias. t is incremented first, so the
// first call uses t = 1 in the bias corrections.
inline void adam_step(MlpEncoder& enc, const Gradients& grads, AdamState& state) {
    if (static_cast<int>(grads.d_weights.size()) != enc.num_layers() ||
        static_cast<int>(grads.d_biases.size()) != enc.num_layers())
        throw std::invalid_argument("adam_step: gradient layer count does not match encoder");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (int l = 0; l < enc.num_layers(); ++l) {
        const auto li = static_cast<std::size_t>(l);
        DenseMatrix& w = enc.weights[li];
        if (!grads.d_weights[li].same_shape(w))
            throw std::invalid_argument("adam_step: gradient shape " + shape_str(grads.d_weights[li]) +
                                        " does not match layer " + std::to_string(l) + " weights " +
                                        shape_str(w));
        detail::adam_update(w.values.data(), state.m_weights[li].values.data(),
                            state.v_weights[li].values.data(), grads.d_weights[li].values.data(),
                            w.values.size(), state, bc1, bc2,
                            "layer " + std::to_string(l) + " weights");
        auto& b = enc.biases[li];
        if (grads.d_biases[li].size() != b.size())
            throw std::invalid_argument("adam_step: bias gradient size does not match layer " +
                                        std::to_string(l));
        detail::adam_update(b.data(), state.m_biases[li].data(), state.v_biases[li].data(),
                            grads.d_biases[li].data(), b.size(), state, bc1, bc2,
                            "layer " + std::to_string(l) + " biases");
    }
    enc.param_version += 1;
}

}  // namespace mgl

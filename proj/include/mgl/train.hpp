#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgl/adam.hpp"
#include "mgl/encoder.hpp"
#include "mgl/graph.hpp"
#include "mgl/loss.hpp"
#include "mgl/matrix.hpp"
#include "mgl/rng.hpp"

namespace mgl {

enum class EncoderKind { mlp, gcn_baseline };

inline EncoderKind encoder_kind_from_string(const std::string& s) {
    if (s == "mlp") return EncoderKind::mlp;
    if (s == "gcn-baseline") return EncoderKind::gcn_baseline;
    throw std::invalid_argument("unknown encoder kind '" + s + "' (mlp|gcn-baseline)");
}

inline std::string to_string(EncoderKind k) {
    return k == EncoderKind::mlp ? "mlp" : "gcn-baseline";
}

struct TrainConfig {
    std::vector<int> dims;  // full architecture [D, hidden..., d]; empty selects [D, 256, 64]
    int epochs = 500;
    double lr = 1e-3;
    double beta = 1.0;
    double gamma = 1.0;
    ProximityMode w_mode = ProximityMode::two_hop;
    std::uint64_t seed = 0;
    EncoderKind encoder_kind = EncoderKind::mlp;
    LossVariant variant = LossVariant::full;

    void validate() const {
        if (epochs < 0) throw std::invalid_argument("train config: epochs must be nonnegative");
        if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
        if (beta < 0.0 || gamma < 0.0)
            throw std::invalid_argument("train config: beta and gamma must be nonnegative");
        if (!dims.empty()) {
            if (dims.size() < 2) throw std::invalid_argument("train config: dims needs at least 2 entries");
            for (int d : dims)
                if (d < 1) throw std::invalid_argument("train config: dims entries must be positive");
        }
    }
};

struct TrainedModel {
    EncoderKind kind = EncoderKind::mlp;
    std::vector<MlpEncoder> encoders;      // populated when kind == mlp
    std::vector<GcnEncoder> gcn_encoders;  // populated when kind == gcn_baseline
    TrainConfig config;
    std::vector<LossReport> loss_history;  // one entry per epoch

    int num_encoders() const {
        return static_cast<int>(kind == EncoderKind::mlp ? encoders.size() : gcn_encoders.size());
    }
};

struct EmbeddingSet {
    std::vector<DenseMatrix> per_layer;  // V matrices, each N x d
    DenseMatrix fused;                   // elementwise mean of per_layer
};

// Features and adjacency only. Training consumes this view, so labels are
// unreachable from the optimization path by construction.
struct UnlabeledView {
    const DenseMatrix* features = nullptr;
    const std::vector<SparseAdjacency>* layers = nullptr;
};

inline UnlabeledView strip_labels(const MultiplexGraph& g) { return {&g.features, &g.layers}; }

namespace detail {

inline std::vector<int> resolve_dims(const TrainConfig& cfg, int feature_dim) {
    std::vector<int> dims = cfg.dims.empty() ? std::vector<int>{feature_dim, 256, 64} : cfg.dims;
    if (dims.front() != feature_dim)
        throw std::invalid_argument("train: dims[0]=" + std::to_string(dims.front()) +
                                    " but features have " + std::to_string(feature_dim) + " columns");
    return dims;
}

// Names the first non-finite term of a report, or "" when all are finite.
inline std::string non_finite_term(const LossReport& r) {
    for (std::size_t v = 0; v < r.lp.size(); ++v)
        if (!std::isfinite(r.lp[v])) return "lp[" + std::to_string(v) + "]";
    if (!std::isfinite(r.cca_invariance)) return "cca_invariance";
    if (!std::isfinite(r.cca_decorrelation)) return "cca_decorrelation";
    if (!std::isfinite(r.total)) return "total";
    return "";
}

}  // namespace detail

inline TrainedModel train(const UnlabeledView& g, const TrainConfig& cfg) {
    cfg.validate();
    if (!g.features || !g.layers || g.layers->empty())
        throw std::invalid_argument("train: graph view has no features or layers");
    const int nv = static_cast<int>(g.layers->size());
    const std::vector<int> dims = detail::resolve_dims(cfg, g.features->cols);

    TrainedModel model;
    model.kind = cfg.encoder_kind;
    model.config = cfg;
    model.config.dims = dims;

    std::vector<AdamState> opt;
    for (int v = 0; v < nv; ++v) {
        Rng rng(cfg.seed, stream::encoder_init + static_cast<std::uint64_t>(v));
        if (cfg.encoder_kind == EncoderKind::mlp) {
            model.encoders.push_back(mlp_init(dims, rng));
            opt.push_back(adam_init(model.encoders.back(), cfg.lr));
        } else {
            model.gcn_encoders.push_back(gcn_init(dims, (*g.layers)[static_cast<std::size_t>(v)], rng));
            opt.push_back(adam_init(model.gcn_encoders.back().params, cfg.lr));
        }
    }

    std::vector<ProximityMatrix> ws;
    if (cfg.variant != LossVariant::cca_only) {
        ws.reserve(static_cast<std::size_t>(nv));
        for (const SparseAdjacency& layer : *g.layers) ws.push_back(high_order(layer, cfg.w_mode));
    } else {
        ws.resize(static_cast<std::size_t>(nv));
        for (auto& w : ws) {
            w.n = g.features->rows;
            w.rows.resize(static_cast<std::size_t>(w.n));
        }
    }

    model.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<ForwardCache> caches(static_cast<std::size_t>(nv));
        std::vector<DenseMatrix> zs(static_cast<std::size_t>(nv));
        for (int v = 0; v < nv; ++v) {
            const auto vi = static_cast<std::size_t>(v);
            caches[vi] = cfg.encoder_kind == EncoderKind::mlp
                             ? mlp_forward(model.encoders[vi], *g.features)
                             : gcn_forward(model.gcn_encoders[vi], *g.features);
            zs[vi] = caches[vi].output();
        }

        TotalLossResult loss = total_loss(zs, ws, cfg.beta, cfg.gamma, cfg.variant);
        const std::string bad = detail::non_finite_term(loss.report);
        if (!bad.empty())
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                     " in term " + bad);

        for (int v = 0; v < nv; ++v) {
            const auto vi = static_cast<std::size_t>(v);
            if (cfg.encoder_kind == EncoderKind::mlp) {
                Gradients grads = mlp_backward(model.encoders[vi], caches[vi], loss.d_z[vi]);
                adam_step(model.encoders[vi], grads, opt[vi]);
            } else {
                Gradients grads = gcn_backward(model.gcn_encoders[vi], caches[vi], loss.d_z[vi]);
                adam_step(model.gcn_encoders[vi].params, grads, opt[vi]);
            }
        }
        model.loss_history.push_back(std::move(loss.report));
    }
    return model;
}

inline TrainedModel train(const MultiplexGraph& g, const TrainConfig& cfg) {
    g.validate();
    return train(strip_labels(g), cfg);
}

namespace detail {

inline EmbeddingSet fuse(std::vector<DenseMatrix> per_layer) {
    EmbeddingSet set;
    set.fused = DenseMatrix(per_layer[0].rows, per_layer[0].cols);
    for (const DenseMatrix& z : per_layer) add_inplace(set.fused, z);
    scale_inplace(set.fused, 1.0 / static_cast<double>(per_layer.size()));
    set.per_layer = std::move(per_layer);
    return set;
}

}  // namespace detail

inline EmbeddingSet embed(const TrainedModel& model, const MultiplexGraph& g) {
    g.validate();
    if (g.num_layers() != model.num_encoders())
        throw std::invalid_argument("embed: graph has " + std::to_string(g.num_layers()) +
                                    " layers, model has " + std::to_string(model.num_encoders()) +
                                    " encoders");
    std::vector<DenseMatrix> per_layer;
    for (int v = 0; v < model.num_encoders(); ++v) {
        const auto vi = static_cast<std::size_t>(v);
        if (model.kind == EncoderKind::mlp) {
            per_layer.push_back(mlp_forward(model.encoders[vi], g.features).output());
        } else {
            // Propagation follows the supplied graph, as message passing must.
            GcnEncoder enc{model.gcn_encoders[vi].params,
                           build_gcn_propagation(g.layers[vi])};
            per_layer.push_back(gcn_forward(enc, g.features).output());
        }
    }
    return detail::fuse(std::move(per_layer));
}

// Embeds rows that were never part of any graph. Takes features only; there
// is no adjacency parameter, so nothing graph-shaped can leak in.
inline EmbeddingSet infer_unseen(const TrainedModel& model, const DenseMatrix& x_un) {
    if (model.kind == EncoderKind::gcn_baseline)
        throw std::invalid_argument(
            "infer_unseen: gcn-baseline encoders need message passing, which would require "
            "reconstructing every graph around the new nodes; only mlp models embed from features alone");
    std::vector<DenseMatrix> per_layer;
    for (const MlpEncoder& enc : model.encoders)
        per_layer.push_back(mlp_forward(enc, x_un).output());
    if (per_layer.empty()) throw std::invalid_argument("infer_unseen: model has no encoders");
    return detail::fuse(std::move(per_layer));
}

}  // namespace mgl

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "mgl/config.hpp"
#include "mgl/eval.hpp"
#include "mgl/graph.hpp"
#include "mgl/sbm.hpp"
#include "mgl/train.hpp"

namespace mgl {

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    for (double x : xs) out.stddev += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(out.stddev / static_cast<double>(xs.size()));
    return out;
}

namespace detail {

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline void normalize_rows_inplace(DenseMatrix& z) {
    for (int i = 0; i < z.rows; ++i) {
        double* r = z.row(i);
        const double nm = norm2(r, z.cols);
        if (nm < kNormEps) continue;
        for (int c = 0; c < z.cols; ++c) r[c] /= nm;
    }
}

inline int distinct_labels(const std::vector<int>& labels) {
    return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

inline int cluster_count(const RunConfig& cfg, const std::vector<int>& labels) {
    return cfg.kmeans_k > 0 ? cfg.kmeans_k : distinct_labels(labels);
}

inline const std::vector<int>& require_labels(const MultiplexGraph& g, const std::string& who) {
    if (!g.labels) throw std::runtime_error(who + ": graph has no labels");
    return *g.labels;
}

// Train on the graph, embed it, cluster the fused embedding, score against
// the graph's labels.
inline double fused_kmeans_nmi(const MultiplexGraph& g, const RunConfig& cfg, TrainConfig tc,
                               std::uint64_t seed) {
    tc.seed = seed;
    const TrainedModel model = train(g, tc);
    EmbeddingSet set = embed(model, g);
    if (cfg.normalize) normalize_rows_inplace(set.fused);
    const std::vector<int>& labels = require_labels(g, "experiment");
    Rng km_rng(seed, stream::kmeans);
    const Partition part = kmeans(set.fused, cluster_count(cfg, labels), km_rng);
    return nmi(part, labels);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Noise robustness: per eta and loss variant, mean/std NMI over the seeds.

struct NoiseCell {
    double eta = 0.0;
    LossVariant variant = LossVariant::full;
    std::vector<double> nmi_per_seed;
    MeanStd nmi;
};

inline std::vector<NoiseCell> noise_sweep(const RunConfig& cfg) {
    static constexpr LossVariant kVariants[] = {LossVariant::full, LossVariant::lp_only,
                                                LossVariant::cca_only};
    std::vector<NoiseCell> cells;
    for (double eta : cfg.eta_list)
        for (LossVariant variant : kVariants) cells.push_back({eta, variant, {}, {}});

    for (std::uint64_t seed : cfg.seeds) {
        Rng rng(seed);
        const SbmResult data = synth_multiplex_sbm(cfg.sbm, rng);
        std::size_t at = 0;
        for (double eta : cfg.eta_list) {
            const MultiplexGraph noisy = inject_noise_all(data.graph, eta, seed);
            for (LossVariant variant : kVariants) {
                TrainConfig tc = cfg.train_config(noisy.features.cols);
                tc.variant = variant;
                cells[at++].nmi_per_seed.push_back(detail::fused_kmeans_nmi(noisy, cfg, tc, seed));
            }
        }
    }
    for (NoiseCell& cell : cells) cell.nmi = mean_std(cell.nmi_per_seed);
    return cells;
}

inline std::string noise_sweep_tsv(const std::vector<NoiseCell>& cells) {
    std::string out = "eta\tvariant\tnmi_mean\tnmi_std\n";
    for (const NoiseCell& c : cells)
        out += detail::fixed6(c.eta) + "\t" + to_string(c.variant) + "\t" +
               detail::fixed6(c.nmi.mean) + "\t" + detail::fixed6(c.nmi.stddev) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Out-of-sample extension: hold out nodes, train on the rest, compare the
// linear probe on seen-test rows against unseen rows embedded from features
// alone. Wall time covers only infer_unseen.

struct OosRow {
    double ratio = 0.0;
    std::uint64_t seed = 0;  // 0 in aggregate rows
    bool aggregate = false;
    bool has_unseen = false;
    double seen_micro_f1 = 0.0;
    double unseen_micro_f1 = 0.0;
    double infer_ms = 0.0;
};

inline std::vector<OosRow> oos_experiment(const RunConfig& cfg) {
    std::vector<OosRow> rows;
    for (double ratio : cfg.oos_ratios) {
        std::vector<double> seen_scores, unseen_scores, times;
        for (std::uint64_t seed : cfg.seeds) {
            Rng rng(seed);
            const SbmResult data = synth_multiplex_sbm(cfg.sbm, rng);
            Rng split_rng(seed, stream::oos);
            const OosSplit split = oos_split(data.graph, ratio, split_rng);

            TrainConfig tc = cfg.train_config(split.train_graph.features.cols);
            tc.seed = seed;
            const TrainedModel model = train(split.train_graph, tc);
            EmbeddingSet seen = embed(model, split.train_graph);
            if (cfg.normalize) detail::normalize_rows_inplace(seen.fused);

            const std::vector<int>& seen_labels = detail::require_labels(split.train_graph, "oos");
            Rng eval_rng(seed, stream::eval_split);
            const IndexSplit idx =
                split_indices(split.train_graph.num_nodes(), cfg.eval_train_frac, eval_rng);
            const DenseMatrix z_train = take_rows(seen.fused, idx.train);
            const std::vector<int> y_train = take_labels(seen_labels, idx.train);

            Rng probe_rng(seed, stream::eval_split + 1);
            const MetricTable seen_metrics =
                linear_probe(z_train, y_train, take_rows(seen.fused, idx.test),
                             take_labels(seen_labels, idx.test), probe_rng);

            OosRow row;
            row.ratio = ratio;
            row.seed = seed;
            row.seen_micro_f1 = seen_metrics.get("micro_f1");
            seen_scores.push_back(row.seen_micro_f1);

            if (split.unseen_features.rows > 0) {
                const auto t0 = std::chrono::steady_clock::now();
                EmbeddingSet unseen = infer_unseen(model, split.unseen_features);
                const auto t1 = std::chrono::steady_clock::now();
                row.infer_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
                if (cfg.normalize) detail::normalize_rows_inplace(unseen.fused);
                const MetricTable unseen_metrics =
                    linear_probe(z_train, y_train, unseen.fused, *split.unseen_labels, probe_rng);
                row.has_unseen = true;
                row.unseen_micro_f1 = unseen_metrics.get("micro_f1");
                unseen_scores.push_back(row.unseen_micro_f1);
                times.push_back(row.infer_ms);
            }
            rows.push_back(row);
        }

        OosRow agg;
        agg.ratio = ratio;
        agg.aggregate = true;
        agg.seen_micro_f1 = mean_std(seen_scores).mean;
        if (!unseen_scores.empty()) {
            agg.has_unseen = true;
            agg.unseen_micro_f1 = mean_std(unseen_scores).mean;
            agg.infer_ms = mean_std(times).mean;
        }
        rows.push_back(agg);
    }
    return rows;
}

inline std::string oos_tsv(const std::vector<OosRow>& rows) {
    std::string out = "ratio\tseed\tseen_micro_f1\tunseen_micro_f1\tinfer_ms\n";
    for (const OosRow& r : rows) {
        out += detail::fixed6(r.ratio) + "\t" + (r.aggregate ? "mean" : std::to_string(r.seed)) +
               "\t" + detail::fixed6(r.seen_micro_f1) + "\t";
        if (r.has_unseen)
            out += detail::fixed6(r.unseen_micro_f1) + "\t" + detail::fixed6(r.infer_ms) + "\n";
        else
            out += "-\t-\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Depth sweep: NMI of both encoder kinds as the network deepens. Depth
// counts weight layers; hidden widths fill the interior.

struct DepthCell {
    int depth = 0;
    EncoderKind kind = EncoderKind::mlp;
    std::vector<double> nmi_per_seed;
    MeanStd nmi;
};

inline std::vector<int> dims_for_depth(int feature_dim, int hidden, int embed_dim, int depth) {
    if (depth < 1) throw std::invalid_argument("depth must be at least 1");
    std::vector<int> dims{feature_dim};
    for (int l = 1; l < depth; ++l) dims.push_back(hidden);
    dims.push_back(embed_dim);
    return dims;
}

inline std::vector<DepthCell> depth_sweep(const RunConfig& cfg) {
    static constexpr EncoderKind kKinds[] = {EncoderKind::mlp, EncoderKind::gcn_baseline};
    std::vector<DepthCell> cells;
    for (int depth : cfg.depth_list)
        for (EncoderKind kind : kKinds) cells.push_back({depth, kind, {}, {}});

    for (std::uint64_t seed : cfg.seeds) {
        Rng rng(seed);
        const SbmResult data = synth_multiplex_sbm(cfg.sbm, rng);
        std::size_t at = 0;
        for (int depth : cfg.depth_list) {
            for (EncoderKind kind : kKinds) {
                TrainConfig tc = cfg.train_config(data.graph.features.cols);
                tc.dims = dims_for_depth(data.graph.features.cols, cfg.hidden, cfg.embed_dim, depth);
                tc.encoder_kind = kind;
                cells[at++].nmi_per_seed.push_back(detail::fused_kmeans_nmi(data.graph, cfg, tc, seed));
            }
        }
    }
    for (DepthCell& cell : cells) cell.nmi = mean_std(cell.nmi_per_seed);
    return cells;
}

inline std::string depth_sweep_tsv(const std::vector<DepthCell>& cells) {
    std::string out = "depth\tencoder_kind\tnmi_mean\tnmi_std\n";
    for (const DepthCell& c : cells)
        out += std::to_string(c.depth) + "\t" + to_string(c.kind) + "\t" +
               detail::fixed6(c.nmi.mean) + "\t" + detail::fixed6(c.nmi.stddev) + "\n";
    return out;
}

}  // namespace mgl

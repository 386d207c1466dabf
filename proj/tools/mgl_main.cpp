#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mgl/config.hpp"
#include "mgl/eval.hpp"
#include "mgl/experiments.hpp"
#include "mgl/gradcheck.hpp"
#include "mgl/graph_io.hpp"
#include "mgl/train.hpp"

namespace {

constexpr const char* kUsage =
    "usage: mgl <command> [--config PATH] [--seed INT] [--out DIR]\n"
    "\n"
    "commands:\n"
    "  synth          generate a synthetic multiplex graph (features, layers, labels)\n"
    "  train          train encoders, write model files, embeddings and a loss log\n"
    "  embed          load model files and emit embeddings for a graph\n"
    "  eval-classify  linear-probe classification metrics for an embedding file\n"
    "  eval-cluster   k-means clustering metrics for an embedding file\n"
    "  noise-sweep    NMI per loss variant under edge-noise levels\n"
    "  oos            out-of-sample inference experiment\n"
    "  depth-sweep    NMI of both encoder kinds across network depths\n"
    "  gradcheck      finite-difference validation of all analytic gradients\n"
    "\n"
    "--seed overrides the config's seed; --out (default '.') receives all files.\n"
    "Config is flat key=value text; run any command with an empty config to see\n"
    "the resolved defaults in <out>/resolved_config.txt.\n";

struct CliArgs {
    std::string command;
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

CliArgs parse_args(int argc, char** argv) {
    if (argc < 2) throw std::invalid_argument("missing command");
    CliArgs args;
    args.command = argv[1];
    for (int i = 2; i < argc; ++i) {
        const std::string flag = argv[i];
        auto next = [&](const char* what) -> std::string {
            if (i + 1 >= argc) throw std::invalid_argument(flag + " needs a " + what);
            return argv[++i];
        };
        if (flag == "--config") args.config_path = next("path");
        else if (flag == "--seed") args.seed = mgl::detail::to_u64("seed", next("value"));
        else if (flag == "--out") args.out_dir = next("directory");
        else throw std::invalid_argument("unknown flag '" + flag + "' (--config, --seed, --out)");
    }
    return args;
}

std::string out_path(const CliArgs& args, const std::string& name) {
    return (std::filesystem::path(args.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

mgl::RunConfig load_run_config(const CliArgs& args) {
    mgl::RunConfig cfg =
        args.config_path ? mgl::parse_config_file(*args.config_path) : mgl::RunConfig{};
    if (args.seed) cfg.seed = *args.seed;
    std::filesystem::create_directories(args.out_dir);
    write_text(out_path(args, "resolved_config.txt"), mgl::echo_config(cfg));
    return cfg;
}

mgl::MultiplexGraph load_input_graph(const mgl::RunConfig& cfg, bool need_labels) {
    if (cfg.features.empty()) throw std::runtime_error("config key 'features' is required");
    if (cfg.layers.empty()) throw std::runtime_error("config key 'layers' is required");
    std::optional<std::string> labels;
    if (!cfg.labels.empty()) labels = cfg.labels;
    if (need_labels && !labels) throw std::runtime_error("config key 'labels' is required");
    std::vector<std::string> warnings;
    mgl::MultiplexGraph g = mgl::load_multiplex(cfg.features, cfg.layers, labels, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    return g;
}

std::string model_file(const mgl::RunConfig& cfg, const CliArgs& args, int v) {
    const std::string prefix =
        cfg.model_prefix.empty() ? out_path(args, "encoder_") : cfg.model_prefix;
    return prefix + std::to_string(v) + ".txt";
}

void write_embeddings(const CliArgs& args, const mgl::RunConfig& cfg, const mgl::EmbeddingSet& set) {
    const std::string fused_path =
        cfg.embedding.empty() ? out_path(args, "embedding.txt") : cfg.embedding;
    mgl::write_embedding(fused_path, set.fused);
    for (std::size_t v = 0; v < set.per_layer.size(); ++v)
        mgl::write_embedding(out_path(args, "embedding_layer" + std::to_string(v) + ".txt"),
                             set.per_layer[v]);
    std::cerr << "wrote fused embedding to " << fused_path << "\n";
}

int cmd_synth(const CliArgs& args, const mgl::RunConfig& cfg) {
    mgl::Rng rng(cfg.seed);
    const mgl::SbmResult data = mgl::synth_multiplex_sbm(cfg.sbm, rng);
    mgl::write_features(out_path(args, "features.txt"), data.graph.features);
    for (int v = 0; v < data.graph.num_layers(); ++v)
        mgl::write_layer(out_path(args, "layer" + std::to_string(v) + ".txt"),
                         data.graph.layers[static_cast<std::size_t>(v)]);
    mgl::write_labels(out_path(args, "labels.txt"), *data.graph.labels);
    std::string pairs = "layer\tblock_a\tblock_b\n";
    for (std::size_t v = 0; v < data.merged_pairs.size(); ++v)
        pairs += std::to_string(v) + "\t" + std::to_string(data.merged_pairs[v].first) + "\t" +
                 std::to_string(data.merged_pairs[v].second) + "\n";
    write_text(out_path(args, "merged_pairs.tsv"), pairs);
    std::cerr << "wrote " << data.graph.num_nodes() << " nodes, " << data.graph.num_layers()
              << " layers to " << args.out_dir << "\n";
    return 0;
}

std::string loss_log_tsv(const mgl::TrainedModel& model) {
    const std::size_t nv =
        model.loss_history.empty() ? 0 : model.loss_history.front().lp.size();
    std::string out = "epoch";
    for (std::size_t v = 0; v < nv; ++v) out += "\tlp" + std::to_string(v);
    out += "\tcca_invariance\tcca_decorrelation\ttotal\n";
    char buf[64];
    for (std::size_t e = 0; e < model.loss_history.size(); ++e) {
        const mgl::LossReport& r = model.loss_history[e];
        out += std::to_string(e);
        for (double lp : r.lp) {
            std::snprintf(buf, sizeof(buf), "%.6f", lp);
            out += std::string("\t") + buf;
        }
        std::snprintf(buf, sizeof(buf), "%.6f", r.cca_invariance);
        out += std::string("\t") + buf;
        std::snprintf(buf, sizeof(buf), "%.6f", r.cca_decorrelation);
        out += std::string("\t") + buf;
        std::snprintf(buf, sizeof(buf), "%.6f", r.total);
        out += std::string("\t") + buf;
        out += "\n";
    }
    return out;
}

int cmd_train(const CliArgs& args, const mgl::RunConfig& cfg) {
    const mgl::MultiplexGraph g = load_input_graph(cfg, false);
    const mgl::TrainConfig tc = cfg.train_config(g.features.cols);
    const mgl::TrainedModel model = mgl::train(g, tc);
    for (int v = 0; v < model.num_encoders(); ++v) {
        const auto vi = static_cast<std::size_t>(v);
        if (model.kind == mgl::EncoderKind::mlp)
            mgl::save_encoder(model_file(cfg, args, v), model.encoders[vi], "MLP");
        else
            mgl::save_encoder(model_file(cfg, args, v), model.gcn_encoders[vi].params, "GCN");
    }
    write_text(out_path(args, "loss_log.tsv"), loss_log_tsv(model));
    write_embeddings(args, cfg, mgl::embed(model, g));
    std::cerr << "trained " << model.num_encoders() << " encoders for " << tc.epochs
              << " epochs\n";
    return 0;
}

mgl::TrainedModel load_model(const mgl::RunConfig& cfg, const CliArgs& args,
                             const mgl::MultiplexGraph& g) {
    mgl::TrainedModel model;
    model.config = cfg.train_config(g.features.cols);
    std::string kind;
    for (int v = 0; v < g.num_layers(); ++v) {
        mgl::LoadedEncoder loaded = mgl::load_encoder(model_file(cfg, args, v));
        if (v == 0) {
            kind = loaded.kind;
            model.kind =
                kind == "GCN" ? mgl::EncoderKind::gcn_baseline : mgl::EncoderKind::mlp;
        } else if (loaded.kind != kind) {
            throw std::runtime_error("model files mix encoder kinds (" + kind + " vs " +
                                     loaded.kind + ")");
        }
        if (model.kind == mgl::EncoderKind::mlp)
            model.encoders.push_back(std::move(loaded.encoder));
        else
            model.gcn_encoders.push_back(
                {std::move(loaded.encoder),
                 mgl::build_gcn_propagation(g.layers[static_cast<std::size_t>(v)])});
    }
    return model;
}

int cmd_embed(const CliArgs& args, const mgl::RunConfig& cfg) {
    const mgl::MultiplexGraph g = load_input_graph(cfg, false);
    const mgl::TrainedModel model = load_model(cfg, args, g);
    write_embeddings(args, cfg, mgl::embed(model, g));
    return 0;
}

struct EvalInput {
    mgl::DenseMatrix z;
    std::vector<int> labels;
};

EvalInput load_eval_input(const mgl::RunConfig& cfg) {
    if (cfg.embedding.empty()) throw std::runtime_error("config key 'embedding' is required");
    if (cfg.labels.empty()) throw std::runtime_error("config key 'labels' is required");
    EvalInput in;
    in.z = mgl::read_embedding(cfg.embedding);
    in.labels = mgl::read_labels(cfg.labels, in.z.rows);
    if (cfg.normalize) mgl::detail::normalize_rows_inplace(in.z);
    return in;
}

std::string seed_rows_tsv(const std::vector<std::string>& columns,
                          const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
    std::string out = "row";
    for (const std::string& c : columns) out += "\t" + c;
    out += "\n";
    std::vector<std::vector<double>> by_col(columns.size());
    for (const auto& [name, values] : rows) {
        out += name;
        for (std::size_t c = 0; c < values.size(); ++c) {
            out += "\t" + mgl::detail::fixed6(values[c]);
            by_col[c].push_back(values[c]);
        }
        out += "\n";
    }
    std::string mean_row = "mean", std_row = "std";
    for (const auto& col : by_col) {
        const mgl::MeanStd ms = mgl::mean_std(col);
        mean_row += "\t" + mgl::detail::fixed6(ms.mean);
        std_row += "\t" + mgl::detail::fixed6(ms.stddev);
    }
    return out + mean_row + "\n" + std_row + "\n";
}

int cmd_eval_classify(const CliArgs& args, const mgl::RunConfig& cfg) {
    const EvalInput in = load_eval_input(cfg);
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    for (std::uint64_t seed : cfg.seeds) {
        mgl::Rng split_rng(seed, mgl::stream::eval_split);
        const mgl::IndexSplit idx = mgl::split_indices(in.z.rows, cfg.eval_train_frac, split_rng);
        mgl::Rng probe_rng(seed, mgl::stream::eval_split + 1);
        std::vector<std::string> warnings;
        const mgl::MetricTable t = mgl::linear_probe(
            mgl::take_rows(in.z, idx.train), mgl::take_labels(in.labels, idx.train),
            mgl::take_rows(in.z, idx.test), mgl::take_labels(in.labels, idx.test), probe_rng,
            &warnings);
        for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
        rows.emplace_back("seed:" + std::to_string(seed),
                          std::vector<double>{t.get("macro_f1"), t.get("micro_f1")});
    }
    const std::string tsv = seed_rows_tsv({"macro_f1", "micro_f1"}, rows);
    write_text(out_path(args, "eval_classify.tsv"), tsv);
    std::cout << tsv;
    return 0;
}

int cmd_eval_cluster(const CliArgs& args, const mgl::RunConfig& cfg) {
    const EvalInput in = load_eval_input(cfg);
    const int k = mgl::detail::cluster_count(cfg, in.labels);
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    for (std::uint64_t seed : cfg.seeds) {
        mgl::Rng km_rng(seed, mgl::stream::kmeans);
        const mgl::Partition part = mgl::kmeans(in.z, k, km_rng);
        rows.emplace_back("seed:" + std::to_string(seed),
                          std::vector<double>{mgl::clustering_accuracy(part, in.labels),
                                              mgl::nmi(part, in.labels),
                                              mgl::silhouette(in.z, part)});
    }
    const std::string tsv = seed_rows_tsv({"accuracy", "nmi", "silhouette"}, rows);
    write_text(out_path(args, "eval_cluster.tsv"), tsv);
    std::cout << tsv;
    return 0;
}

int cmd_noise_sweep(const CliArgs& args, const mgl::RunConfig& cfg) {
    const std::string tsv = mgl::noise_sweep_tsv(mgl::noise_sweep(cfg));
    write_text(out_path(args, "noise_sweep.tsv"), tsv);
    std::cout << tsv;
    return 0;
}

int cmd_oos(const CliArgs& args, const mgl::RunConfig& cfg) {
    const std::string tsv = mgl::oos_tsv(mgl::oos_experiment(cfg));
    write_text(out_path(args, "oos.tsv"), tsv);
    std::cout << tsv;
    return 0;
}

int cmd_depth_sweep(const CliArgs& args, const mgl::RunConfig& cfg) {
    const std::string tsv = mgl::depth_sweep_tsv(mgl::depth_sweep(cfg));
    write_text(out_path(args, "depth_sweep.tsv"), tsv);
    std::cout << tsv;
    return 0;
}

int cmd_gradcheck(const CliArgs& args, const mgl::RunConfig& cfg) {
    mgl::GradCheckOptions opt;
    opt.seed = cfg.seed;
    const std::vector<mgl::GradCheckResult> results = mgl::run_gradchecks(opt);
    const std::string report = mgl::gradcheck_report(results);
    write_text(out_path(args, "gradcheck.tsv"), report);
    std::cout << report;
    if (!mgl::all_passed(results)) {
        for (const mgl::GradCheckResult& r : results)
            if (!r.pass)
                std::cerr << "gradient check failed for " << r.component << " (max rel err "
                          << r.max_rel_err << ")\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        if (argc >= 2 && (std::string(argv[1]) == "--help" || std::string(argv[1]) == "help" ||
                          std::string(argv[1]) == "-h")) {
            std::cout << kUsage;
            return 0;
        }
        const CliArgs args = parse_args(argc, argv);
        const mgl::RunConfig cfg = load_run_config(args);
        if (args.command == "synth") return cmd_synth(args, cfg);
        if (args.command == "train") return cmd_train(args, cfg);
        if (args.command == "embed") return cmd_embed(args, cfg);
        if (args.command == "eval-classify") return cmd_eval_classify(args, cfg);
        if (args.command == "eval-cluster") return cmd_eval_cluster(args, cfg);
        if (args.command == "noise-sweep") return cmd_noise_sweep(args, cfg);
        if (args.command == "oos") return cmd_oos(args, cfg);
        if (args.command == "depth-sweep") return cmd_depth_sweep(args, cfg);
        if (args.command == "gradcheck") return cmd_gradcheck(args, cfg);
        throw std::invalid_argument("unknown command '" + args.command + "'");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n" << kUsage;
        return 1;
    }
}

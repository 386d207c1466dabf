#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgl/loss.hpp"
#include "mgl/sbm.hpp"
#include "mgl/train.hpp"

namespace mgl {

// Flat key=value run configuration shared by every CLI command; one pair per
// line, '#' starts a comment. Unknown keys are rejected.
struct RunConfig {
    SbmConfig sbm;

    std::vector<int> dims;  // full encoder architecture; empty derives [D, hidden, embed_dim]
    int hidden = 256;
    int embed_dim = 64;
    int epochs = 500;
    double lr = 1e-3;
    double beta = 1.0;
    double gamma = 1.0;
    ProximityMode w_mode = ProximityMode::two_hop;
    EncoderKind encoder_kind = EncoderKind::mlp;
    LossVariant loss_variant = LossVariant::full;
    std::uint64_t seed = 1;

    std::string features;
    std::vector<std::string> layers;
    std::string labels;
    std::string embedding;
    std::string model_prefix;

    double eval_train_frac = 0.2;
    bool normalize = false;
    int kmeans_k = 0;  // 0 means one cluster per distinct label

    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<double> eta_list = {0.0, 0.5};
    std::vector<double> oos_ratios = {0.4};
    std::vector<int> depth_list = {2, 12};

    TrainConfig train_config(int feature_dim) const {
        TrainConfig cfg;
        cfg.dims = dims.empty() ? std::vector<int>{feature_dim, hidden, embed_dim} : dims;
        cfg.epochs = epochs;
        cfg.lr = lr;
        cfg.beta = beta;
        cfg.gamma = gamma;
        cfg.w_mode = w_mode;
        cfg.seed = seed;
        cfg.encoder_kind = encoder_kind;
        cfg.variant = loss_variant;
        return cfg;
    }
};

namespace detail {

inline const char* config_key_list() {
    return "n k v d_feat p_in p_out feature_noise complementary dims hidden embed_dim epochs lr "
           "beta gamma w_mode encoder_kind loss_variant seed features layers labels embedding "
           "model_prefix eval_train_frac normalize kmeans_k seeds eta_list oos_ratios depth_list";
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const int out = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': '" + v + "' is not an integer");
    }
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': '" + v + "' is not a number");
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long out = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<std::uint64_t>(out);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': '" + v +
                                    "' is not a nonnegative integer");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config key '" + key + "': '" + v + "' is not true/false");
}

inline std::vector<std::string> split_commas(const std::string& v) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) parts.push_back(cur);
    }
    return parts;
}

}  // namespace detail

inline void apply_config_pair(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::split_commas;
    if (key == "n") cfg.sbm.n = detail::to_int(key, value);
    else if (key == "k") cfg.sbm.k = detail::to_int(key, value);
    else if (key == "v") cfg.sbm.v = detail::to_int(key, value);
    else if (key == "d_feat") cfg.sbm.d_feat = detail::to_int(key, value);
    else if (key == "p_in") cfg.sbm.p_in = detail::to_double(key, value);
    else if (key == "p_out") cfg.sbm.p_out = detail::to_double(key, value);
    else if (key == "feature_noise") cfg.sbm.feature_noise = detail::to_double(key, value);
    else if (key == "complementary") cfg.sbm.complementary = detail::to_bool(key, value);
    else if (key == "dims") {
        cfg.dims.clear();
        for (const std::string& p : split_commas(value)) cfg.dims.push_back(detail::to_int(key, p));
    } else if (key == "hidden") cfg.hidden = detail::to_int(key, value);
    else if (key == "embed_dim") cfg.embed_dim = detail::to_int(key, value);
    else if (key == "epochs") cfg.epochs = detail::to_int(key, value);
    else if (key == "lr") cfg.lr = detail::to_double(key, value);
    else if (key == "beta") cfg.beta = detail::to_double(key, value);
    else if (key == "gamma") cfg.gamma = detail::to_double(key, value);
    else if (key == "w_mode") cfg.w_mode = proximity_mode_from_string(value);
    else if (key == "encoder_kind") cfg.encoder_kind = encoder_kind_from_string(value);
    else if (key == "loss_variant") cfg.loss_variant = loss_variant_from_string(value);
    else if (key == "seed") cfg.seed = detail::to_u64(key, value);
    else if (key == "features") cfg.features = value;
    else if (key == "layers") cfg.layers = split_commas(value);
    else if (key == "labels") cfg.labels = value;
    else if (key == "embedding") cfg.embedding = value;
    else if (key == "model_prefix") cfg.model_prefix = value;
    else if (key == "eval_train_frac") cfg.eval_train_frac = detail::to_double(key, value);
    else if (key == "normalize") cfg.normalize = detail::to_bool(key, value);
    else if (key == "kmeans_k") cfg.kmeans_k = detail::to_int(key, value);
    else if (key == "seeds") {
        cfg.seeds.clear();
        for (const std::string& p : split_commas(value)) cfg.seeds.push_back(detail::to_u64(key, p));
    } else if (key == "eta_list") {
        cfg.eta_list.clear();
        for (const std::string& p : split_commas(value)) cfg.eta_list.push_back(detail::to_double(key, p));
    } else if (key == "oos_ratios") {
        cfg.oos_ratios.clear();
        for (const std::string& p : split_commas(value))
            cfg.oos_ratios.push_back(detail::to_double(key, p));
    } else if (key == "depth_list") {
        cfg.depth_list.clear();
        for (const std::string& p : split_commas(value))
            cfg.depth_list.push_back(detail::to_int(key, p));
    } else {
        throw std::invalid_argument("unknown config key '" + key + "'; valid keys: " +
                                    detail::config_key_list());
    }
}

inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value, got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        apply_config_pair(cfg, key, value);
    }
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config_text(buf.str());
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

namespace detail {

inline std::string num_str(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F fmt) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += fmt(xs[i]);
    }
    return out;
}

}  // namespace detail

// Every key with its final value, in a fixed order; written verbatim by each
// command so any run documents the exact configuration it resolved.
inline std::string echo_config(const RunConfig& c) {
    using detail::join;
    using detail::num_str;
    std::string out;
    auto kv = [&out](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
    kv("n", std::to_string(c.sbm.n));
    kv("k", std::to_string(c.sbm.k));
    kv("v", std::to_string(c.sbm.v));
    kv("d_feat", std::to_string(c.sbm.d_feat));
    kv("p_in", num_str(c.sbm.p_in));
    kv("p_out", num_str(c.sbm.p_out));
    kv("feature_noise", num_str(c.sbm.feature_noise));
    kv("complementary", c.sbm.complementary ? "true" : "false");
    kv("dims", join(c.dims, [](int d) { return std::to_string(d); }));
    kv("hidden", std::to_string(c.hidden));
    kv("embed_dim", std::to_string(c.embed_dim));
    kv("epochs", std::to_string(c.epochs));
    kv("lr", num_str(c.lr));
    kv("beta", num_str(c.beta));
    kv("gamma", num_str(c.gamma));
    kv("w_mode", to_string(c.w_mode));
    kv("encoder_kind", to_string(c.encoder_kind));
    kv("loss_variant", to_string(c.loss_variant));
    kv("seed", std::to_string(c.seed));
    kv("features", c.features);
    kv("layers", join(c.layers, [](const std::string& s) { return s; }));
    kv("labels", c.labels);
    kv("embedding", c.embedding);
    kv("model_prefix", c.model_prefix);
    kv("eval_train_frac", num_str(c.eval_train_frac));
    kv("normalize", c.normalize ? "true" : "false");
    kv("kmeans_k", std::to_string(c.kmeans_k));
    kv("seeds", join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }));
    kv("eta_list", join(c.eta_list, [](double e) { return num_str(e); }));
    kv("oos_ratios", join(c.oos_ratios, [](double r) { return num_str(r); }));
    kv("depth_list", join(c.depth_list, [](int d) { return std::to_string(d); }));
    return out;
}

}  // namespace mgl

#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mgl/graph.hpp"
#include "mgl/matrix.hpp"

namespace mgl {

// File formats (all UTF-8, '\n' line endings, '.' decimal separator):
//   features  line 1 "N D", then N lines of D space-separated decimals
//   layer     lines "src dst [weight]", 0-indexed, weight defaults to 1.0,
//             '#' starts a comment
//   labels    lines "node_index label_index"

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::runtime_error parse_error(const std::string& path, int line, const std::string& msg) {
    return std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

inline double parse_double(const std::string& tok, const std::string& path, int line) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw parse_error(path, line, "expected a number, got '" + tok + "'");
    }
    if (pos != tok.size()) throw parse_error(path, line, "expected a number, got '" + tok + "'");
    return v;
}

inline int parse_int(const std::string& tok, const std::string& path, int line) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        throw parse_error(path, line, "expected an integer, got '" + tok + "'");
    }
    if (pos != tok.size()) throw parse_error(path, line, "expected an integer, got '" + tok + "'");
    return static_cast<int>(v);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

inline std::string strip_comment(const std::string& s) {
    const auto pos = s.find('#');
    return pos == std::string::npos ? s : s.substr(0, pos);
}

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return in;
}

}  // namespace detail

inline DenseMatrix read_features(const std::string& path) {
    auto in = detail::open_or_throw(path);
    std::string line;
    int lineno = 0;

    if (!std::getline(in, line)) throw detail::parse_error(path, 1, "empty features file");
    ++lineno;
    auto header = detail::split_ws(line);
    if (header.size() != 2) throw detail::parse_error(path, lineno, "expected header 'N D'");
    const int n = detail::parse_int(header[0], path, lineno);
    const int d = detail::parse_int(header[1], path, lineno);
    if (n < 1 || d < 1) throw detail::parse_error(path, lineno, "N and D must be positive");

    DenseMatrix x(n, d);
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line))
            throw detail::parse_error(path, lineno + 1, "expected " + std::to_string(n) +
                                      " feature rows, file ended after " + std::to_string(i));
        ++lineno;
        auto toks = detail::split_ws(line);
        if (static_cast<int>(toks.size()) != d)
            throw detail::parse_error(path, lineno, "expected " + std::to_string(d) + " values, got " +
                                      std::to_string(toks.size()));
        for (int j = 0; j < d; ++j) x(i, j) = detail::parse_double(toks[static_cast<std::size_t>(j)], path, lineno);
    }
    return x;
}

inline SparseAdjacency read_layer(const std::string& path, int n) {
    auto in = detail::open_or_throw(path);
    std::string line;
    int lineno = 0;
    std::vector<std::tuple<int, int, double>> edges;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = detail::split_ws(detail::strip_comment(line));
        if (toks.empty()) continue;
        if (toks.size() != 2 && toks.size() != 3)
            throw detail::parse_error(path, lineno, "expected 'src dst [weight]'");
        const int src = detail::parse_int(toks[0], path, lineno);
        const int dst = detail::parse_int(toks[1], path, lineno);
        if (src < 0 || src >= n || dst < 0 || dst >= n)
            throw detail::parse_error(path, lineno, "node index out of range [0," + std::to_string(n) + ")");
        if (src == dst) throw detail::parse_error(path, lineno, "self-loop not allowed");
        const double w = toks.size() == 3 ? detail::parse_double(toks[2], path, lineno) : 1.0;
        if (w < 0.0) throw detail::parse_error(path, lineno, "negative edge weight");
        edges.emplace_back(src, dst, w);
    }
    return SparseAdjacency::from_undirected(n, edges);
}

inline std::vector<int> read_labels(const std::string& path, int n) {
    auto in = detail::open_or_throw(path);
    std::string line;
    int lineno = 0;
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = detail::split_ws(detail::strip_comment(line));
        if (toks.empty()) continue;
        if (toks.size() != 2) throw detail::parse_error(path, lineno, "expected 'node_index label_index'");
        const int node = detail::parse_int(toks[0], path, lineno);
        const int label = detail::parse_int(toks[1], path, lineno);
        if (node < 0 || node >= n)
            throw detail::parse_error(path, lineno, "node index out of range [0," + std::to_string(n) + ")");
        if (label < 0) throw detail::parse_error(path, lineno, "label must be nonnegative");
        labels[static_cast<std::size_t>(node)] = label;
    }
    for (int i = 0; i < n; ++i)
        if (labels[static_cast<std::size_t>(i)] < 0)
            throw std::runtime_error(path + ": no label for node " + std::to_string(i));
    return labels;
}

// Loads and validates a multiplex graph. Zero-edge layers are accepted; a
// note per such layer is appended to `warnings` when provided.
inline MultiplexGraph load_multiplex(const std::string& features_path,
                                     const std::vector<std::string>& layer_paths,
                                     const std::optional<std::string>& labels_path = std::nullopt,
                                     std::vector<std::string>* warnings = nullptr) {
    if (layer_paths.empty()) throw std::invalid_argument("load_multiplex: need at least one layer file");
    MultiplexGraph g;
    g.features = read_features(features_path);
    for (const auto& lp : layer_paths) {
        g.layers.push_back(read_layer(lp, g.features.rows));
        if (warnings && g.layers.back().undirected_edge_count() == 0)
            warnings->push_back("layer file " + lp + " has zero edges");
    }
    if (labels_path) g.labels = read_labels(*labels_path, g.features.rows);
    g.validate();
    return g;
}

namespace detail {
inline std::ofstream create_or_throw(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    return out;
}
}  // namespace detail

inline void write_features(const std::string& path, const DenseMatrix& x) {
    auto out = detail::create_or_throw(path);
    out << x.rows << " " << x.cols << "\n";
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) {
            if (j) out << " ";
            out << detail::fmt_double(x(i, j));
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_layer(const std::string& path, const SparseAdjacency& a) {
    auto out = detail::create_or_throw(path);
    for (const auto& [i, j, w] : a.undirected_edges())
        out << i << " " << j << " " << detail::fmt_double(w) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_labels(const std::string& path, const std::vector<int>& labels) {
    auto out = detail::create_or_throw(path);
    for (std::size_t i = 0; i < labels.size(); ++i) out << i << " " << labels[i] << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

// Embedding file: line 1 "N d", then N rows of d decimals.
inline void write_embedding(const std::string& path, const DenseMatrix& z) {
    write_features(path, z);
}

inline DenseMatrix read_embedding(const std::string& path) { return read_features(path); }

}  // namespace mgl

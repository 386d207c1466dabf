#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "mgl/adam.hpp"
#include "mgl/encoder.hpp"
#include "mgl/gradcheck.hpp"
#include "mgl/rng.hpp"

using namespace mgl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const fs::path dir =
        fs::temp_directory_path() / ("mgl_model_" + tag + "_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

// Central finite differences over every coordinate, the reference any
// analytic gradient must match.
std::vector<double> fd_grad(const std::function<double(const std::vector<double>&)>& f,
                            std::vector<double> x) {
    std::vector<double> g(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) {
        const double h = 1e-5 * (1.0 + std::fabs(x[c]));
        const double saved = x[c];
        x[c] = saved + h;
        const double fp = f(x);
        x[c] = saved - h;
        const double fm = f(x);
        x[c] = saved;
        g[c] = (fp - fm) / (2.0 * h);
    }
    return g;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst,
                         std::fabs(a[i] - b[i]) / std::max({1.0, std::fabs(a[i]), std::fabs(b[i])}));
    return worst;
}

DenseMatrix random_matrix(int rows, int cols, Rng& rng) {
    DenseMatrix m(rows, cols);
    for (double& v : m.values) v = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("initial weights respect the fan-based bound, biases start at zero") {
    Rng rng(1);
    const std::vector<int> dims{6, 4, 3};
    const MlpEncoder enc = mlp_init(dims, rng);
    REQUIRE(enc.num_layers() == 2);
    REQUIRE(enc.input_dim() == 6);
    REQUIRE(enc.output_dim() == 3);
    REQUIRE(enc.param_version == 0);
    for (int l = 0; l < 2; ++l) {
        const auto li = static_cast<std::size_t>(l);
        const double bound = std::sqrt(6.0 / (dims[li] + dims[li + 1]));
        REQUIRE(enc.weights[li].rows == dims[li]);
        REQUIRE(enc.weights[li].cols == dims[li + 1]);
        bool nonzero = false;
        for (double v : enc.weights[li].values) {
            REQUIRE(std::fabs(v) <= bound);
            nonzero = nonzero || v != 0.0;
        }
        REQUIRE(nonzero);
        for (double b : enc.biases[li]) REQUIRE(b == 0.0);
    }

    REQUIRE_THROWS_AS(mlp_init({5}, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(mlp_init({5, 0, 3}, rng), std::invalid_argument);
}

TEST_CASE("forward pass matches a hand-computed value") {
    MlpEncoder enc;
    enc.dims = {2, 2, 1};
    enc.weights.emplace_back(2, 2);
    enc.weights[0](0, 0) = 1.0;
    enc.weights[0](1, 1) = 1.0;
    enc.biases.push_back({0.5, -0.5});
    enc.weights.emplace_back(2, 1);
    enc.weights[1](0, 0) = 2.0;
    enc.weights[1](1, 0) = -1.0;
    enc.biases.push_back({0.1});

    DenseMatrix x(1, 2);
    x(0, 0) = 0.3;
    x(0, 1) = 0.7;
    const ForwardCache cache = mlp_forward(enc, x);
    const double want = 2.0 * std::tanh(0.8) - std::tanh(0.2) + 0.1;
    REQUIRE(cache.output()(0, 0) == Catch::Approx(want).epsilon(1e-14));
    REQUIRE(cache.pre.size() == 2);
    REQUIRE(cache.post.size() == 2);
    REQUIRE(cache.pre[0](0, 0) == Catch::Approx(0.8));
    REQUIRE(cache.post[0](0, 0) == Catch::Approx(std::tanh(0.8)));
    // Final layer is linear: post == pre.
    REQUIRE(cache.post[1].values == cache.pre[1].values);

    REQUIRE_THROWS_AS(mlp_forward(enc, DenseMatrix(1, 3)), std::invalid_argument);
}

TEST_CASE("backward gradients match finite differences") {
    Rng rng(4);
    for (const auto& dims : {std::vector<int>{5, 4, 3}, std::vector<int>{6, 8, 8, 2}}) {
        const int n = 6;
        MlpEncoder enc = mlp_init(dims, rng);
        const DenseMatrix x = random_matrix(n, dims.front(), rng);
        const DenseMatrix r = random_matrix(n, dims.back(), rng);
        auto score = [&](const ForwardCache& c) {
            return dot(r.values.data(), c.output().values.data(),
                       static_cast<int>(r.values.size()));
        };
        const Gradients g = mlp_backward(enc, mlp_forward(enc, x), r);

        auto f_params = [&](const std::vector<double>& p) {
            MlpEncoder e = enc;
            unflatten_params(e, p);
            return score(mlp_forward(e, x));
        };
        REQUIRE(max_rel_err(flatten_grads(g), fd_grad(f_params, flatten_params(enc))) < 1e-5);

        auto f_input = [&](const std::vector<double>& xv) {
            DenseMatrix xx(n, dims.front());
            xx.values = xv;
            return score(mlp_forward(enc, xx));
        };
        REQUIRE(max_rel_err(g.d_input.values, fd_grad(f_input, x.values)) < 1e-5);
    }
}

TEST_CASE("batched forward equals row-by-row forward") {
    Rng rng(6);
    const std::vector<int> dims{4, 5, 2};
    const MlpEncoder enc = mlp_init(dims, rng);
    const DenseMatrix x = random_matrix(5, 4, rng);
    const ForwardCache batch = mlp_forward(enc, x);
    for (int i = 0; i < x.rows; ++i) {
        DenseMatrix xi(1, 4);
        std::copy(x.row(i), x.row(i) + 4, xi.row(0));
        const ForwardCache single = mlp_forward(enc, xi);
        for (int j = 0; j < 2; ++j)
            REQUIRE(single.output()(0, j) == Catch::Approx(batch.output()(i, j)).margin(1e-13));
    }
}

TEST_CASE("backward rejects foreign, stale and misshapen inputs") {
    Rng rng(5);
    const std::vector<int> dims{3, 4, 2};
    MlpEncoder enc = mlp_init(dims, rng);
    MlpEncoder other = mlp_init(dims, rng);
    const DenseMatrix x = random_matrix(4, 3, rng);
    const DenseMatrix dz = random_matrix(4, 2, rng);

    const ForwardCache cache = mlp_forward(enc, x);
    REQUIRE_THROWS_WITH(mlp_backward(other, cache, dz),
                        Catch::Matchers::ContainsSubstring("different encoder"));
    REQUIRE_THROWS_WITH(mlp_backward(enc, cache, DenseMatrix(4, 3)),
                        Catch::Matchers::ContainsSubstring("dz shape"));

    AdamState state = adam_init(enc, 0.01);
    const Gradients g = mlp_backward(enc, cache, dz);
    adam_step(enc, g, state);
    REQUIRE_THROWS_WITH(mlp_backward(enc, cache, dz),
                        Catch::Matchers::ContainsSubstring("stale"));
    REQUIRE_NOTHROW(mlp_backward(enc, mlp_forward(enc, x), dz));
}

TEST_CASE("first optimizer step moves each parameter by lr * sign-like ratio") {
    Rng rng(7);
    const std::vector<int> dims{3, 2};
    MlpEncoder enc = mlp_init(dims, rng);
    const MlpEncoder before = enc;
    AdamState state = adam_init(enc, 0.05);

    Gradients g;
    g.d_weights.emplace_back(3, 2);
    for (double& v : g.d_weights[0].values) v = rng.normal();
    g.d_biases.push_back({0.5, -2.0});

    adam_step(enc, g, state);
    REQUIRE(state.t == 1);
    REQUIRE(enc.param_version == 1);

    // With fresh moments the first update is exactly -lr * g / (|g| + eps).
    for (std::size_t i = 0; i < enc.weights[0].values.size(); ++i) {
        const double grad = g.d_weights[0].values[i];
        const double want = before.weights[0].values[i] -
                            0.05 * grad / (std::fabs(grad) + state.eps);
        REQUIRE(enc.weights[0].values[i] == Catch::Approx(want).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < enc.biases[0].size(); ++i) {
        const double grad = g.d_biases[0][i];
        const double want = before.biases[0][i] - 0.05 * grad / (std::fabs(grad) + state.eps);
        REQUIRE(enc.biases[0][i] == Catch::Approx(want).epsilon(1e-12));
    }

    adam_step(enc, g, state);
    REQUIRE(state.t == 2);
    REQUIRE(enc.param_version == 2);
}

TEST_CASE("optimizer rejects bad gradients") {
    Rng rng(8);
    MlpEncoder enc = mlp_init({3, 2}, rng);
    AdamState state = adam_init(enc, 0.01);

    Gradients g;
    g.d_weights.emplace_back(3, 2);
    g.d_biases.push_back({0.0, 0.0});
    g.d_weights[0](1, 1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_WITH(adam_step(enc, g, state),
                        Catch::Matchers::ContainsSubstring("layer 0 weights"));

    Gradients bad_shape;
    bad_shape.d_weights.emplace_back(2, 2);
    bad_shape.d_biases.push_back({0.0, 0.0});
    REQUIRE_THROWS_AS(adam_step(enc, bad_shape, state), std::invalid_argument);

    Gradients missing;
    REQUIRE_THROWS_AS(adam_step(enc, missing, state), std::invalid_argument);
}

TEST_CASE("encoder files round-trip bit-exactly") {
    Rng rng(9);
    const MlpEncoder enc = mlp_init({5, 7, 3}, rng);
    const auto dir = fresh_dir("ser");
    const std::string path = (dir / "enc.txt").string();

    save_encoder(path, enc);
    const LoadedEncoder back = load_encoder(path);
    REQUIRE(back.kind == "MLP");
    REQUIRE(back.encoder.dims == enc.dims);
    for (int l = 0; l < enc.num_layers(); ++l) {
        const auto li = static_cast<std::size_t>(l);
        REQUIRE(back.encoder.weights[li].values == enc.weights[li].values);
        REQUIRE(back.encoder.biases[li] == enc.biases[li]);
    }

    save_encoder(path, enc, "GCN");
    REQUIRE(load_encoder(path).kind == "GCN");
}

TEST_CASE("encoder loading reports malformed files") {
    const auto dir = fresh_dir("load");
    const std::string missing = (dir / "missing.txt").string();
    REQUIRE_THROWS_WITH(load_encoder(missing), Catch::Matchers::ContainsSubstring("missing.txt"));

    const std::string bad = (dir / "bad.txt").string();
    {
        std::ofstream out(bad);
        out << "RNN 2 3 4 2\n";
    }
    REQUIRE_THROWS_WITH(load_encoder(bad), Catch::Matchers::ContainsSubstring("header"));
    {
        std::ofstream out(bad);
        out << "MLP 1 3 2\n1.0 2.0\n";
    }
    REQUIRE_THROWS_WITH(load_encoder(bad), Catch::Matchers::ContainsSubstring("truncated"));
}

TEST_CASE("propagation weights on a path graph match the closed form") {
    const auto a = SparseAdjacency::from_undirected(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    const PropagationMatrix prop = build_gcn_propagation(a);
    // Self-loop added before normalizing: degrees 2, 3, 2.
    REQUIRE(prop[0].size() == 2);
    REQUIRE(prop[0][0] == std::make_pair(0, 0.5));
    REQUIRE(prop[0][1].first == 1);
    REQUIRE(prop[0][1].second == Catch::Approx(1.0 / std::sqrt(6.0)));
    REQUIRE(prop[1].size() == 3);
    REQUIRE(prop[1][0].first == 0);
    REQUIRE(prop[1][1] == std::make_pair(1, 1.0 / 3.0));
    REQUIRE(prop[1][2].first == 2);
    REQUIRE(prop[2].size() == 2);
    REQUIRE(prop[2][1] == std::make_pair(2, 0.5));

    // Rows come out sorted by column index.
    for (const auto& row : prop)
        for (std::size_t k = 1; k < row.size(); ++k) REQUIRE(row[k - 1].first < row[k].first);
}

TEST_CASE("propagation over an empty graph is the identity") {
    Rng rng(10);
    const SparseAdjacency empty(6);
    const std::vector<int> dims{4, 5, 2};
    const GcnEncoder gcn = gcn_init(dims, empty, rng);
    Rng rng2(10);
    const MlpEncoder mlp = mlp_init(dims, rng2);

    const DenseMatrix x = random_matrix(6, 4, rng);
    const ForwardCache gc = gcn_forward(gcn, x);
    const ForwardCache mc = mlp_forward(mlp, x);
    REQUIRE(gc.output().values == mc.output().values);
}

TEST_CASE("graph-propagated gradients match finite differences") {
    Rng rng(11);
    const std::vector<int> dims{4, 5, 3};
    const int n = 8;
    const auto a = SparseAdjacency::from_undirected(
        n, {{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 1.0}, {3, 4, 1.0}, {4, 5, 1.5}, {5, 6, 1.0}, {6, 7, 1.0}, {0, 7, 1.0}});
    GcnEncoder enc = gcn_init(dims, a, rng);
    const DenseMatrix x = random_matrix(n, dims.front(), rng);
    const DenseMatrix r = random_matrix(n, dims.back(), rng);
    auto score = [&](const ForwardCache& c) {
        return dot(r.values.data(), c.output().values.data(), static_cast<int>(r.values.size()));
    };
    const Gradients g = gcn_backward(enc, gcn_forward(enc, x), r);

    auto f_params = [&](const std::vector<double>& p) {
        GcnEncoder e{enc.params, enc.prop};
        unflatten_params(e.params, p);
        return score(gcn_forward(e, x));
    };
    REQUIRE(max_rel_err(flatten_grads(g), fd_grad(f_params, flatten_params(enc.params))) < 1e-5);

    auto f_input = [&](const std::vector<double>& xv) {
        DenseMatrix xx(n, dims.front());
        xx.values = xv;
        return score(gcn_forward(enc, xx));
    };
    REQUIRE(max_rel_err(g.d_input.values, fd_grad(f_input, x.values)) < 1e-5);

    REQUIRE_THROWS_AS(propagate(enc.prop, DenseMatrix(5, 4)), std::invalid_argument);
}

TEST_CASE("parameter flattening round-trips and validates length") {
    Rng rng(12);
    MlpEncoder enc = mlp_init({3, 4, 2}, rng);
    const std::vector<double> flat = flatten_params(enc);
    REQUIRE(flat.size() == 3 * 4 + 4 + 4 * 2 + 2);

    MlpEncoder copy = enc;
    std::vector<double> shifted = flat;
    for (double& v : shifted) v += 1.0;
    const std::uint64_t version_before = copy.param_version;
    unflatten_params(copy, shifted);
    REQUIRE(copy.param_version == version_before + 1);
    REQUIRE(flatten_params(copy) == shifted);

    REQUIRE_THROWS_AS(unflatten_params(copy, std::vector<double>(5, 0.0)),
                      std::invalid_argument);
}

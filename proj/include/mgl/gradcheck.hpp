#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mgl/encoder.hpp"
#include "mgl/graph.hpp"
#include "mgl/loss.hpp"
#include "mgl/matrix.hpp"
#include "mgl/rng.hpp"

namespace mgl {

// Encoder parameters as one flat vector: weights then biases, layer by
// layer. unflatten_params restores the same order.
inline std::vector<double> flatten_params(const MlpEncoder& enc) {
    std::vector<double> flat;
    for (int l = 0; l < enc.num_layers(); ++l) {
        const auto li = static_cast<std::size_t>(l);
        flat.insert(flat.end(), enc.weights[li].values.begin(), enc.weights[li].values.end());
        flat.insert(flat.end(), enc.biases[li].begin(), enc.biases[li].end());
    }
    return flat;
}

inline void unflatten_params(MlpEncoder& enc, const std::vector<double>& flat) {
    std::size_t at = 0;
    for (int l = 0; l < enc.num_layers(); ++l) {
        const auto li = static_cast<std::size_t>(l);
        for (double& v : enc.weights[li].values) v = flat[at++];
        for (double& v : enc.biases[li]) v = flat[at++];
    }
    if (at != flat.size())
        throw std::invalid_argument("unflatten_params: vector length does not match encoder");
    enc.param_version += 1;
}

inline std::vector<double> flatten_grads(const Gradients& g) {
    std::vector<double> flat;
    for (std::size_t l = 0; l < g.d_weights.size(); ++l) {
        flat.insert(flat.end(), g.d_weights[l].values.begin(), g.d_weights[l].values.end());
        flat.insert(flat.end(), g.d_biases[l].begin(), g.d_biases[l].end());
    }
    return flat;
}

struct GradCheckResult {
    std::string component;
    double max_rel_err = 0.0;
    bool pass = false;
};

struct GradCheckOptions {
    double tol = 1e-4;
    std::uint64_t seed = 7;
    int max_coords = 40;            // FD-probed coordinates per component
    std::string corrupt_component;  // test hook: negates one analytic entry
};

namespace detail {

// Central finite differences on up to max_coords coordinates of x, compared
// against the analytic gradient with error |a-f| / max(1,|a|,|f|).
inline double fd_max_rel_err(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x, std::vector<double> grad,
                             const GradCheckOptions& opt, const std::string& component, Rng& rng) {
    if (grad.size() != x.size())
        throw std::invalid_argument("gradcheck: gradient length does not match input");
    if (component == opt.corrupt_component && !grad.empty()) grad[0] = -grad[0] - 1.0;

    std::vector<std::size_t> coords(x.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (static_cast<int>(coords.size()) > opt.max_coords) {
        for (int t = 0; t < opt.max_coords; ++t) {
            const std::size_t pick =
                static_cast<std::size_t>(t) +
                static_cast<std::size_t>(rng.uniform_int(static_cast<int>(coords.size()) - t));
            std::swap(coords[static_cast<std::size_t>(t)], coords[pick]);
        }
        coords.resize(static_cast<std::size_t>(opt.max_coords));
        coords[0] = 0;  // always probed: the corruption hook targets entry 0
    }

    double worst = 0.0;
    for (std::size_t c : coords) {
        const double h = 1e-5 * (1.0 + std::fabs(x[c]));
        const double saved = x[c];
        x[c] = saved + h;
        const double fp = f(x);
        x[c] = saved - h;
        const double fm = f(x);
        x[c] = saved;
        const double fd = (fp - fm) / (2.0 * h);
        const double rel = std::fabs(grad[c] - fd) /
                           std::max({1.0, std::fabs(grad[c]), std::fabs(fd)});
        worst = std::max(worst, rel);
    }
    return worst;
}

inline DenseMatrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
    DenseMatrix m(rows, cols);
    for (double& v : m.values) v = scale * rng.normal();
    return m;
}

inline std::vector<double> concat_values(const std::vector<DenseMatrix>& ms) {
    std::vector<double> flat;
    for (const DenseMatrix& m : ms) flat.insert(flat.end(), m.values.begin(), m.values.end());
    return flat;
}

inline std::vector<DenseMatrix> split_values(const std::vector<double>& flat,
                                             const std::vector<DenseMatrix>& like) {
    std::vector<DenseMatrix> out;
    std::size_t at = 0;
    for (const DenseMatrix& m : like) {
        DenseMatrix x(m.rows, m.cols);
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), x.values.size(),
                    x.values.begin());
        at += x.values.size();
        out.push_back(std::move(x));
    }
    return out;
}

inline SparseAdjacency small_random_graph(int n, double p, Rng& rng) {
    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < p) edges.emplace_back(i, j, 1.0 + rng.uniform());
    if (edges.empty()) edges.emplace_back(0, n - 1, 1.0);
    return SparseAdjacency::from_undirected(n, edges);
}

}  // namespace detail

// Finite-difference validation of every analytic gradient: the two loss
// terms, their combination, parameter and input gradients of both encoder
// types, and the full loss-through-encoder chain used by a training step.
inline std::vector<GradCheckResult> run_gradchecks(const GradCheckOptions& opt = {}) {
    std::vector<GradCheckResult> results;
    Rng rng(opt.seed);

    auto record = [&](const std::string& component, double err) {
        results.push_back({component, err, err <= opt.tol});
    };

    {  // lp_loss on a random embedding against a random graph's proximity
        const int n = 10, d = 5;
        const DenseMatrix z = detail::random_matrix(n, d, rng);
        const SparseAdjacency a = detail::small_random_graph(n, 0.4, rng);
        const ProximityMatrix w = high_order(a, ProximityMode::two_hop);
        const LpResult res = lp_loss(z, w);
        auto f = [&](const std::vector<double>& x) {
            DenseMatrix zx(n, d);
            zx.values = x;
            return lp_loss(zx, w).value;
        };
        record("lp_loss", detail::fd_max_rel_err(f, z.values, res.d_z.values, opt, "lp_loss", rng));
    }

    {  // cca_loss across three views
        const int n = 12, d = 4;
        const double gamma = 0.7;
        std::vector<DenseMatrix> zs;
        for (int v = 0; v < 3; ++v) zs.push_back(detail::random_matrix(n, d, rng));
        const CcaResult res = cca_loss(zs, gamma);
        auto f = [&](const std::vector<double>& x) {
            const std::vector<DenseMatrix> zx = detail::split_values(x, zs);
            const CcaResult r = cca_loss(zx, gamma);
            return r.invariance + gamma * r.decorrelation;
        };
        record("cca_loss", detail::fd_max_rel_err(f, detail::concat_values(zs),
                                                  detail::concat_values(res.d_z), opt, "cca_loss", rng));
    }

    {  // combined objective over two views
        const int n = 11, d = 4;
        const double beta = 0.8, gamma = 1.3;
        std::vector<DenseMatrix> zs;
        std::vector<ProximityMatrix> ws;
        for (int v = 0; v < 2; ++v) {
            zs.push_back(detail::random_matrix(n, d, rng));
            ws.push_back(high_order(detail::small_random_graph(n, 0.4, rng), ProximityMode::combined));
        }
        const TotalLossResult res = total_loss(zs, ws, beta, gamma);
        auto f = [&](const std::vector<double>& x) {
            return total_loss(detail::split_values(x, zs), ws, beta, gamma).report.total;
        };
        record("total_loss", detail::fd_max_rel_err(f, detail::concat_values(zs),
                                                    detail::concat_values(res.d_z), opt, "total_loss",
                                                    rng));
    }

    {  // MLP parameter and input gradients of <R, forward(x)>
        const int n = 7;
        const std::vector<int> dims{5, 4, 4, 3};
        MlpEncoder enc = mlp_init(dims, rng);
        const DenseMatrix x = detail::random_matrix(n, dims.front(), rng);
        const DenseMatrix r = detail::random_matrix(n, dims.back(), rng);
        auto score = [&](const ForwardCache& cache) {
            return dot(r.values.data(), cache.output().values.data(), static_cast<int>(r.values.size()));
        };
        const Gradients g = mlp_backward(enc, mlp_forward(enc, x), r);

        auto f_params = [&](const std::vector<double>& p) {
            MlpEncoder e = enc;
            unflatten_params(e, p);
            return score(mlp_forward(e, x));
        };
        record("mlp_params", detail::fd_max_rel_err(f_params, flatten_params(enc), flatten_grads(g),
                                                    opt, "mlp_params", rng));
        auto f_input = [&](const std::vector<double>& xv) {
            DenseMatrix xx(n, dims.front());
            xx.values = xv;
            return score(mlp_forward(enc, xx));
        };
        record("mlp_input",
               detail::fd_max_rel_err(f_input, x.values, g.d_input.values, opt, "mlp_input", rng));
    }

    {  // GCN parameter and input gradients
        const int n = 9;
        const std::vector<int> dims{4, 5, 3};
        const SparseAdjacency a = detail::small_random_graph(n, 0.35, rng);
        GcnEncoder enc = gcn_init(dims, a, rng);
        const DenseMatrix x = detail::random_matrix(n, dims.front(), rng);
        const DenseMatrix r = detail::random_matrix(n, dims.back(), rng);
        auto score = [&](const ForwardCache& cache) {
            return dot(r.values.data(), cache.output().values.data(), static_cast<int>(r.values.size()));
        };
        const Gradients g = gcn_backward(enc, gcn_forward(enc, x), r);

        auto f_params = [&](const std::vector<double>& p) {
            GcnEncoder e{enc.params, enc.prop};
            unflatten_params(e.params, p);
            return score(gcn_forward(e, x));
        };
        record("gcn_params", detail::fd_max_rel_err(f_params, flatten_params(enc.params),
                                                    flatten_grads(g), opt, "gcn_params", rng));
        auto f_input = [&](const std::vector<double>& xv) {
            DenseMatrix xx(n, dims.front());
            xx.values = xv;
            return score(gcn_forward(enc, xx));
        };
        record("gcn_input",
               detail::fd_max_rel_err(f_input, x.values, g.d_input.values, opt, "gcn_input", rng));
    }

    {  // the full training-step chain: objective as a function of parameters
        const int n = 12, nv = 2;
        const std::vector<int> dims{6, 5, 5};
        const double beta = 1.0, gamma = 1.0;
        const DenseMatrix x = detail::random_matrix(n, dims.front(), rng);
        std::vector<SparseAdjacency> layers;
        std::vector<ProximityMatrix> ws;
        std::vector<MlpEncoder> encs;
        for (int v = 0; v < nv; ++v) {
            layers.push_back(detail::small_random_graph(n, 0.4, rng));
            ws.push_back(high_order(layers.back(), ProximityMode::two_hop));
            encs.push_back(mlp_init(dims, rng));
        }

        std::vector<ForwardCache> caches;
        std::vector<DenseMatrix> zs;
        for (int v = 0; v < nv; ++v) {
            caches.push_back(mlp_forward(encs[static_cast<std::size_t>(v)], x));
            zs.push_back(caches.back().output());
        }
        const TotalLossResult loss = total_loss(zs, ws, beta, gamma);
        std::vector<double> analytic;
        for (int v = 0; v < nv; ++v) {
            const auto vi = static_cast<std::size_t>(v);
            const Gradients g = mlp_backward(encs[vi], caches[vi], loss.d_z[vi]);
            const std::vector<double> flat = flatten_grads(g);
            analytic.insert(analytic.end(), flat.begin(), flat.end());
        }

        std::vector<double> params;
        const std::size_t per_enc = flatten_params(encs[0]).size();
        for (const MlpEncoder& e : encs) {
            const std::vector<double> flat = flatten_params(e);
            params.insert(params.end(), flat.begin(), flat.end());
        }
        auto f = [&](const std::vector<double>& p) {
            std::vector<DenseMatrix> zx;
            for (int v = 0; v < nv; ++v) {
                MlpEncoder e = encs[static_cast<std::size_t>(v)];
                unflatten_params(e, std::vector<double>(
                                        p.begin() + static_cast<std::ptrdiff_t>(per_enc * static_cast<std::size_t>(v)),
                                        p.begin() + static_cast<std::ptrdiff_t>(per_enc * static_cast<std::size_t>(v + 1))));
                zx.push_back(mlp_forward(e, x).output());
            }
            return total_loss(zx, ws, beta, gamma).report.total;
        };
        record("train_step", detail::fd_max_rel_err(f, params, analytic, opt, "train_step", rng));
    }

    return results;
}

inline bool all_passed(const std::vector<GradCheckResult>& results) {
    for (const GradCheckResult& r : results)
        if (!r.pass) return false;
    return !results.empty();
}

// One line per component: name, max relative error, PASS/FAIL.
inline std::string gradcheck_report(const std::vector<GradCheckResult>& results) {
    std::string out = "component\tmax_rel_err\tstatus\n";
    char buf[64];
    for (const GradCheckResult& r : results) {
        std::snprintf(buf, sizeof(buf), "%.3e", r.max_rel_err);
        out += r.component + "\t" + buf + "\t" + (r.pass ? "PASS" : "FAIL") + "\n";
    }
    return out;
}

}  // namespace mgl

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgl/graph.hpp"
#include "mgl/matrix.hpp"

namespace mgl {

// Which terms enter the training objective.
enum class LossVariant { full, lp_only, cca_only };

inline LossVariant loss_variant_from_string(const std::string& s) {
    if (s == "full") return LossVariant::full;
    if (s == "lp_only") return LossVariant::lp_only;
    if (s == "cca_only") return LossVariant::cca_only;
    throw std::invalid_argument("unknown loss variant '" + s + "' (full|lp_only|cca_only)");
}

inline std::string to_string(LossVariant v) {
    switch (v) {
        case LossVariant::full: return "full";
        case LossVariant::lp_only: return "lp_only";
        default: return "cca_only";
    }
}

struct LpResult {
    double value = 0.0;
    DenseMatrix d_z;
};

namespace detail {

// Rows of z scaled to unit norm; rows with norm below kNormEps become zero,
// matching cosine_similarity. Row norms are returned through norms.
inline DenseMatrix unit_rows(const DenseMatrix& z, std::vector<double>& norms) {
    DenseMatrix u(z.rows, z.cols);
    norms.assign(static_cast<std::size_t>(z.rows), 0.0);
    for (int i = 0; i < z.rows; ++i) {
        const double nm = norm2(z.row(i), z.cols);
        norms[static_cast<std::size_t>(i)] = nm;
        if (nm < kNormEps) continue;
        const double* zi = z.row(i);
        double* ui = u.row(i);
        for (int c = 0; c < z.cols; ++c) ui[c] = zi[c] / nm;
    }
    return u;
}

}  // namespace detail

// Local-structure loss over one view. For every node i with a nonempty
// proximity row S_i it adds
//     log(sum_{k != i} exp(cos(z_i, z_k)))  -  sum_{j in S_i} w_ij cos(z_i, z_j)
// with the proximity weights w_ij normalized to sum to one within the row.
// Nodes with empty rows contribute nothing. Returns the value and its exact
// gradient in z; rows of z with norm below kNormEps get a zero gradient.
inline LpResult lp_loss(const DenseMatrix& z, const ProximityMatrix& w) {
    const int n = z.rows;
    if (w.n != n)
        throw std::invalid_argument("lp_loss: proximity is over " + std::to_string(w.n) +
                                    " nodes, embedding has " + std::to_string(n) + " rows");

    std::vector<double> norms;
    const DenseMatrix u = detail::unit_rows(z, norms);
    DenseMatrix cos_nn = matmul_nt(u, u);
    for (double& v : cos_nn.values) v = std::clamp(v, -1.0, 1.0);

    LpResult res;
    res.d_z = DenseMatrix(n, z.cols);
    DenseMatrix g(n, n);  // d value / d cos, rows of unsupported nodes stay zero
    for (int i = 0; i < n; ++i) {
        const auto& support = w.rows[static_cast<std::size_t>(i)];
        if (support.empty()) continue;
        const double* ci = cos_nn.row(i);
        double denom = 0.0;
        for (int k = 0; k < n; ++k)
            if (k != i) denom += std::exp(ci[k]);
        double* gi = g.row(i);
        for (int k = 0; k < n; ++k)
            if (k != i) gi[k] = std::exp(ci[k]) / denom;
        double total_w = 0.0;
        for (const auto& [j, wij] : support) total_w += wij;
        double pulled = 0.0;
        for (const auto& [j, wij] : support) {
            const double hw = wij / total_w;
            pulled += hw * ci[j];
            gi[j] -= hw;
        }
        res.value += std::log(denom) - pulled;
    }

    // Symmetrize: cos(i,k) appears under both orderings.
    DenseMatrix h = g;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < i; ++k) {
            const double s = h(i, k) + h(k, i);
            h(i, k) = s;
            h(k, i) = s;
        }

    const DenseMatrix hu = matmul(h, u);
    for (int m = 0; m < n; ++m) {
        const double nm = norms[static_cast<std::size_t>(m)];
        if (nm < kNormEps) continue;
        const double s = dot(h.row(m), cos_nn.row(m), n);
        const double* hum = hu.row(m);
        const double* um = u.row(m);
        double* dm = res.d_z.row(m);
        for (int c = 0; c < z.cols; ++c) dm[c] = (hum[c] - s * um[c]) / nm;
    }
    return res;
}

// Gradient of <g_hat, standardize_columns(z)> with respect to z, using the
// per-column byproducts captured at the forward call.
inline DenseMatrix standardize_backward(const DenseMatrix& z_hat, const ColumnStats& stats,
                                        const DenseMatrix& g_hat) {
    if (!z_hat.same_shape(g_hat))
        throw std::invalid_argument("standardize_backward: shape mismatch " + shape_str(z_hat) +
                                    " vs " + shape_str(g_hat));
    const int n = z_hat.rows, d = z_hat.cols;
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    DenseMatrix out(n, d);
    for (int j = 0; j < d; ++j) {
        double mean_dc = 0.0;
        if (stats.floored[static_cast<std::size_t>(j)]) {
            const double denom = kStdEps * sqrt_n;
            for (int i = 0; i < n; ++i) {
                out(i, j) = g_hat(i, j) / denom;
                mean_dc += out(i, j);
            }
        } else {
            double proj = 0.0;  // z_hat column is the unit centered column
            for (int i = 0; i < n; ++i) proj += z_hat(i, j) * g_hat(i, j);
            const double denom = stats.centered_norm[static_cast<std::size_t>(j)];
            for (int i = 0; i < n; ++i) {
                out(i, j) = (g_hat(i, j) - proj * z_hat(i, j)) / denom;
                mean_dc += out(i, j);
            }
        }
        mean_dc /= n;
        for (int i = 0; i < n; ++i) out(i, j) -= mean_dc;
    }
    return out;
}

struct CcaResult {
    double invariance = 0.0;     // negated sum of cross-view correlation traces
    double decorrelation = 0.0;  // squared distance of each view's correlation matrix from I
    std::vector<DenseMatrix> d_z;  // gradient of invariance + gamma * decorrelation
};

// Correlation loss across views. Each embedding is standardized column-wise,
// then the loss rewards cross-view agreement, tr(Za^T Zb) summed over pairs
// and negated, and penalizes within-view redundancy, ||Zv^T Zv - I||_F^2.
inline CcaResult cca_loss(const std::vector<DenseMatrix>& zs, double gamma) {
    if (zs.empty()) throw std::invalid_argument("cca_loss: no views");
    if (gamma < 0.0) throw std::invalid_argument("cca_loss: gamma must be nonnegative");
    const std::size_t nv = zs.size();
    for (std::size_t v = 1; v < nv; ++v)
        if (!zs[v].same_shape(zs[0]))
            throw std::invalid_argument("cca_loss: view " + std::to_string(v) + " has shape " +
                                        shape_str(zs[v]) + ", view 0 has " + shape_str(zs[0]));
    const int n = zs[0].rows, d = zs[0].cols;

    std::vector<DenseMatrix> hat(nv);
    std::vector<ColumnStats> stats(nv);
    for (std::size_t v = 0; v < nv; ++v) hat[v] = standardize_columns(zs[v], &stats[v]);

    CcaResult res;
    for (std::size_t a = 0; a < nv; ++a)
        for (std::size_t b = a + 1; b < nv; ++b)
            res.invariance -= dot(hat[a].values.data(), hat[b].values.data(), n * d);

    DenseMatrix sum_hat(n, d);
    for (const DenseMatrix& h : hat) add_inplace(sum_hat, h);

    res.d_z.resize(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        DenseMatrix corr = matmul_tn(hat[v], hat[v]);
        for (int j = 0; j < d; ++j) corr(j, j) -= 1.0;
        res.decorrelation += frobenius_norm(corr) * frobenius_norm(corr);

        // d invariance / d hat = -(sum of other views); d decorrelation / d hat = 4 hat corr.
        DenseMatrix g_hat = matmul(hat[v], corr);
        scale_inplace(g_hat, 4.0 * gamma);
        for (std::size_t i = 0; i < g_hat.values.size(); ++i)
            g_hat.values[i] -= sum_hat.values[i] - hat[v].values[i];
        res.d_z[v] = standardize_backward(hat[v], stats[v], g_hat);
    }
    return res;
}

// Per-term values of one training step. total always equals
// sum(lp) + beta * (cca_invariance + gamma * cca_decorrelation) for the
// beta and gamma it was computed with; terms outside the variant are zero.
struct LossReport {
    std::vector<double> lp;
    double cca_invariance = 0.0;
    double cca_decorrelation = 0.0;
    double total = 0.0;
};

struct TotalLossResult {
    LossReport report;
    std::vector<DenseMatrix> d_z;
};

inline TotalLossResult total_loss(const std::vector<DenseMatrix>& zs,
                                  const std::vector<ProximityMatrix>& ws, double beta, double gamma,
                                  LossVariant variant = LossVariant::full) {
    if (zs.empty()) throw std::invalid_argument("total_loss: no views");
    if (beta < 0.0) throw std::invalid_argument("total_loss: beta must be nonnegative");
    const std::size_t nv = zs.size();
    if (variant != LossVariant::cca_only && ws.size() != nv)
        throw std::invalid_argument("total_loss: " + std::to_string(nv) + " embeddings but " +
                                    std::to_string(ws.size()) + " proximity matrices");

    TotalLossResult res;
    res.report.lp.assign(nv, 0.0);
    res.d_z.resize(nv);
    for (std::size_t v = 0; v < nv; ++v) res.d_z[v] = DenseMatrix(zs[v].rows, zs[v].cols);

    if (variant != LossVariant::cca_only) {
        for (std::size_t v = 0; v < nv; ++v) {
            LpResult lp = lp_loss(zs[v], ws[v]);
            res.report.lp[v] = lp.value;
            add_inplace(res.d_z[v], lp.d_z);
            res.report.total += lp.value;
        }
    }
    if (variant != LossVariant::lp_only) {
        CcaResult cca = cca_loss(zs, gamma);
        res.report.cca_invariance = cca.invariance;
        res.report.cca_decorrelation = cca.decorrelation;
        res.report.total += beta * (cca.invariance + gamma * cca.decorrelation);
        for (std::size_t v = 0; v < nv; ++v) {
            scale_inplace(cca.d_z[v], beta);
            add_inplace(res.d_z[v], cca.d_z[v]);
        }
    }
    return res;
}

}  // namespace mgl

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgl/matrix.hpp"
#include "mgl/rng.hpp"

namespace mgl {

struct Partition {
    std::vector<int> assignments;
    int k = 0;

    void validate() const {
        if (k < 1) throw std::invalid_argument("partition: k must be positive");
        for (int a : assignments)
            if (a < 0 || a >= k)
                throw std::invalid_argument("partition: assignment " + std::to_string(a) +
                                            " outside [0," + std::to_string(k) + ")");
    }
};

// Named metric values in insertion order.
struct MetricTable {
    std::vector<std::pair<std::string, double>> entries;

    void add(const std::string& name, double value) { entries.emplace_back(name, value); }

    double get(const std::string& name) const {
        for (const auto& [n, v] : entries)
            if (n == name) return v;
        throw std::out_of_range("metric table has no entry '" + name + "'");
    }
};

inline std::string to_tsv(const MetricTable& table) {
    std::string out = "metric\tvalue\n";
    char buf[64];
    for (const auto& [name, value] : table.entries) {
        std::snprintf(buf, sizeof(buf), "%.6f", value);
        out += name + "\t" + buf + "\n";
    }
    return out;
}

namespace detail {

inline int num_classes(const std::vector<int>& a, const std::vector<int>& b) {
    int k = 0;
    for (int y : a) {
        if (y < 0) throw std::invalid_argument("labels must be nonnegative");
        k = std::max(k, y + 1);
    }
    for (int y : b) {
        if (y < 0) throw std::invalid_argument("labels must be nonnegative");
        k = std::max(k, y + 1);
    }
    return k;
}

}  // namespace detail

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw std::invalid_argument("accuracy: prediction and label counts differ or are empty");
    int correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

namespace detail {

struct ClassCounts {
    std::vector<int> tp, fp, fn;
    std::vector<bool> relevant;  // classes appearing in pred, truth or the extra set
};

inline ClassCounts class_counts(const std::vector<int>& pred, const std::vector<int>& truth,
                                const std::vector<int>* extra_classes) {
    if (pred.size() != truth.size() || pred.empty())
        throw std::invalid_argument("f1: prediction and label counts differ or are empty");
    int k = num_classes(pred, truth);
    if (extra_classes)
        k = std::max(k, num_classes(*extra_classes, *extra_classes));
    ClassCounts c;
    c.tp.assign(static_cast<std::size_t>(k), 0);
    c.fp = c.tp;
    c.fn = c.tp;
    c.relevant.assign(static_cast<std::size_t>(k), false);
    if (extra_classes)
        for (int y : *extra_classes) c.relevant[static_cast<std::size_t>(y)] = true;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        c.relevant[static_cast<std::size_t>(pred[i])] = true;
        c.relevant[static_cast<std::size_t>(truth[i])] = true;
        if (pred[i] == truth[i]) ++c.tp[static_cast<std::size_t>(pred[i])];
        else {
            ++c.fp[static_cast<std::size_t>(pred[i])];
            ++c.fn[static_cast<std::size_t>(truth[i])];
        }
    }
    return c;
}

}  // namespace detail

// F1 from pooled counts: 2*TP / (2*TP + FP + FN) summed over classes.
inline double micro_f1(const std::vector<int>& pred, const std::vector<int>& truth) {
    const detail::ClassCounts c = detail::class_counts(pred, truth, nullptr);
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < c.tp.size(); ++i) {
        tp += c.tp[i];
        fp += c.fp[i];
        fn += c.fn[i];
    }
    return 2.0 * tp / (2.0 * tp + fp + fn);
}

// Unweighted mean of per-class F1 over classes present in pred, truth or
// `extra_classes`; a class never predicted and never true contributes 0.
inline double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth,
                       const std::vector<int>* extra_classes = nullptr) {
    const detail::ClassCounts c = detail::class_counts(pred, truth, extra_classes);
    double total = 0.0;
    int n_classes = 0;
    for (std::size_t i = 0; i < c.tp.size(); ++i) {
        if (!c.relevant[i]) continue;
        ++n_classes;
        const double denom = 2.0 * c.tp[i] + c.fp[i] + c.fn[i];
        if (denom > 0.0) total += 2.0 * c.tp[i] / denom;
    }
    return total / n_classes;
}

// Multinomial logistic regression probe: softmax with an L2 penalty of
// 1e-4 * ||W||^2 / 2 (bias unpenalized), 200 full-batch gradient-descent
// iterations at step size 0.5 from zero weights. Deterministic; the rng
// parameter is reserved for optional subsampling and is currently unread.
// Test classes never seen in training are warned about and score 0 in
// macro-F1.
inline MetricTable linear_probe(const DenseMatrix& z_train, const std::vector<int>& y_train,
                                const DenseMatrix& z_test, const std::vector<int>& y_test, Rng& rng,
                                std::vector<std::string>* warnings = nullptr) {
    (void)rng;
    if (z_train.rows != static_cast<int>(y_train.size()) ||
        z_test.rows != static_cast<int>(y_test.size()))
        throw std::invalid_argument("linear_probe: embedding rows and label counts differ");
    if (z_train.cols != z_test.cols)
        throw std::invalid_argument("linear_probe: train dim " + std::to_string(z_train.cols) +
                                    " vs test dim " + std::to_string(z_test.cols));
    if (z_train.rows < 1 || z_test.rows < 1)
        throw std::invalid_argument("linear_probe: empty train or test set");

    const int k = detail::num_classes(y_train, y_test);
    std::vector<bool> in_train(static_cast<std::size_t>(k), false);
    for (int y : y_train) in_train[static_cast<std::size_t>(y)] = true;
    if (std::count(in_train.begin(), in_train.end(), true) < 2)
        throw std::invalid_argument("linear_probe: need at least 2 classes in training labels");
    for (int c = 0; c < k; ++c)
        if (!in_train[static_cast<std::size_t>(c)] && warnings &&
            std::find(y_test.begin(), y_test.end(), c) != y_test.end())
            warnings->push_back("class " + std::to_string(c) +
                                " appears only in the test set and scores 0 in macro-F1");

    const int n = z_train.rows;
    const double lambda = 1e-4, lr = 0.5;
    DenseMatrix w(z_train.cols, k);
    std::vector<double> b(static_cast<std::size_t>(k), 0.0);

    auto add_bias_and_softmax = [&](DenseMatrix& logits) {
        for (int i = 0; i < logits.rows; ++i) {
            double* r = logits.row(i);
            for (int c = 0; c < k; ++c) r[c] += b[static_cast<std::size_t>(c)];
            const double mx = *std::max_element(r, r + k);
            double sum = 0.0;
            for (int c = 0; c < k; ++c) {
                r[c] = std::exp(r[c] - mx);
                sum += r[c];
            }
            for (int c = 0; c < k; ++c) r[c] /= sum;
        }
    };

    for (int it = 0; it < 200; ++it) {
        DenseMatrix p = matmul(z_train, w);
        add_bias_and_softmax(p);
        for (int i = 0; i < n; ++i) p(i, y_train[static_cast<std::size_t>(i)]) -= 1.0;

        DenseMatrix gw = matmul_tn(z_train, p);
        for (std::size_t e = 0; e < gw.values.size(); ++e)
            gw.values[e] = gw.values[e] / n + lambda * w.values[e];
        add_inplace(w, gw, -lr);
        for (int c = 0; c < k; ++c) {
            double gb = 0.0;
            for (int i = 0; i < n; ++i) gb += p(i, c);
            b[static_cast<std::size_t>(c)] -= lr * gb / n;
        }
    }

    DenseMatrix logits = matmul(z_test, w);
    std::vector<int> pred(static_cast<std::size_t>(z_test.rows));
    for (int i = 0; i < z_test.rows; ++i) {
        double* r = logits.row(i);
        for (int c = 0; c < k; ++c) r[c] += b[static_cast<std::size_t>(c)];
        pred[static_cast<std::size_t>(i)] = static_cast<int>(std::max_element(r, r + k) - r);
    }

    MetricTable out;
    out.add("macro_f1", macro_f1(pred, y_test, &y_train));
    out.add("micro_f1", micro_f1(pred, y_test));
    return out;
}

namespace detail {

inline double sq_dist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

struct KmeansRun {
    std::vector<int> assign;
    double inertia = 0.0;
};

inline KmeansRun kmeans_once(const DenseMatrix& z, int k, Rng& rng) {
    const int n = z.rows, d = z.cols;
    DenseMatrix centroids(k, d);

    // k-means++ seeding: each next centroid is drawn with probability
    // proportional to squared distance from the nearest chosen one.
    std::vector<double> dist2(static_cast<std::size_t>(n), std::numeric_limits<double>::max());
    std::copy_n(z.row(rng.uniform_int(n)), d, centroids.row(0));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            auto& best = dist2[static_cast<std::size_t>(i)];
            best = std::min(best, sq_dist(z.row(i), centroids.row(c - 1), d));
            total += best;
        }
        int pick;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += dist2[static_cast<std::size_t>(i)];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_int(n);
        }
        std::copy_n(z.row(pick), d, centroids.row(c));
    }

    KmeansRun run;
    run.assign.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    std::vector<double> point_d2(static_cast<std::size_t>(n));
    double prev_inertia = std::numeric_limits<double>::max();
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = sq_dist(z.row(i), centroids.row(0), d);
            for (int c = 1; c < k; ++c) {
                const double d2 = sq_dist(z.row(i), centroids.row(c), d);
                if (d2 < bd) {
                    bd = d2;
                    best = c;
                }
            }
            point_d2[static_cast<std::size_t>(i)] = bd;
            inertia += bd;
            if (run.assign[static_cast<std::size_t>(i)] != best) {
                run.assign[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }

        std::fill(counts.begin(), counts.end(), 0);
        for (int a : run.assign) ++counts[static_cast<std::size_t>(a)];
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            // Re-seed an empty cluster at the point farthest from its centroid.
            int far = 0;
            for (int i = 1; i < n; ++i)
                if (point_d2[static_cast<std::size_t>(i)] > point_d2[static_cast<std::size_t>(far)])
                    far = i;
            inertia -= point_d2[static_cast<std::size_t>(far)];
            point_d2[static_cast<std::size_t>(far)] = 0.0;
            --counts[static_cast<std::size_t>(run.assign[static_cast<std::size_t>(far)])];
            run.assign[static_cast<std::size_t>(far)] = c;
            counts[static_cast<std::size_t>(c)] = 1;
            std::copy_n(z.row(far), d, centroids.row(c));
            changed = true;
        }

        if (inertia > prev_inertia + 1e-9 * (1.0 + prev_inertia))
            throw std::logic_error("kmeans: inertia increased across an iteration");
        prev_inertia = inertia;
        run.inertia = inertia;
        if (!changed) break;

        std::fill(centroids.values.begin(), centroids.values.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            double* cr = centroids.row(run.assign[static_cast<std::size_t>(i)]);
            const double* zi = z.row(i);
            for (int j = 0; j < d; ++j) cr[j] += zi[j];
        }
        for (int c = 0; c < k; ++c) {
            double* cr = centroids.row(c);
            for (int j = 0; j < d; ++j) cr[j] /= counts[static_cast<std::size_t>(c)];
        }
    }
    return run;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding, at most 300 iterations, best of
// 10 restarts by inertia (ties keep the earliest restart). Each restart uses
// its own substream, so the winner does not depend on evaluation order.
inline Partition kmeans(const DenseMatrix& z, int k, Rng& rng, int restarts = 10) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be positive");
    if (k > z.rows)
        throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds " +
                                    std::to_string(z.rows) + " points");
    if (restarts < 1) throw std::invalid_argument("kmeans: needs at least one restart");

    const std::uint64_t base = rng.next_u64();
    detail::KmeansRun best;
    best.inertia = std::numeric_limits<double>::max();
    for (int r = 0; r < restarts; ++r) {
        Rng sub(base, static_cast<std::uint64_t>(r));
        detail::KmeansRun run = detail::kmeans_once(z, k, sub);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    return Partition{std::move(best.assign), k};
}

namespace detail {

// Contingency counts padded to a square m x m matrix.
inline std::vector<std::vector<double>> contingency(const Partition& p, const std::vector<int>& labels) {
    p.validate();
    if (p.assignments.size() != labels.size())
        throw std::invalid_argument("partition has " + std::to_string(p.assignments.size()) +
                                    " assignments, labels have " + std::to_string(labels.size()));
    int k_labels = 0;
    for (int y : labels) {
        if (y < 0) throw std::invalid_argument("labels must be nonnegative");
        k_labels = std::max(k_labels, y + 1);
    }
    const int m = std::max(p.k, k_labels);
    std::vector<std::vector<double>> cont(static_cast<std::size_t>(m),
                                          std::vector<double>(static_cast<std::size_t>(m), 0.0));
    for (std::size_t i = 0; i < labels.size(); ++i)
        cont[static_cast<std::size_t>(p.assignments[i])][static_cast<std::size_t>(labels[i])] += 1.0;
    return cont;
}

// Best one-to-one matching by exhausting all m! mappings. Oracle path for
// small m.
inline double max_assignment_exhaustive(const std::vector<std::vector<double>>& score) {
    const int m = static_cast<int>(score.size());
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    double best = -std::numeric_limits<double>::max();
    do {
        double total = 0.0;
        for (int i = 0; i < m; ++i) total += score[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Best one-to-one matching via the Hungarian method with potentials,
// maximizing by negating the scores.
inline double max_assignment_hungarian(const std::vector<std::vector<double>>& score) {
    const int m = static_cast<int>(score.size());
    const double kInf = std::numeric_limits<double>::max();
    std::vector<double> u(static_cast<std::size_t>(m) + 1, 0.0), v(u);
    std::vector<int> match(static_cast<std::size_t>(m) + 1, 0);  // column -> row
    std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
    for (int i = 1; i <= m; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
        std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur =
                    -score[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                    u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        while (j0 != 0) {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        }
    }
    double total = 0.0;
    for (int j = 1; j <= m; ++j)
        total += score[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)]
                      [static_cast<std::size_t>(j - 1)];
    return total;
}

}  // namespace detail

// Fraction of points matched under the best one-to-one cluster-to-label
// mapping, exhaustive for up to 8 groups and Hungarian above that.
inline double clustering_accuracy(const Partition& p, const std::vector<int>& labels) {
    const auto cont = detail::contingency(p, labels);
    const int m = static_cast<int>(cont.size());
    if (m > 20) throw std::invalid_argument("clustering_accuracy: more than 20 groups");
    if (labels.empty()) throw std::invalid_argument("clustering_accuracy: empty input");
    const double matched =
        m <= 8 ? detail::max_assignment_exhaustive(cont) : detail::max_assignment_hungarian(cont);
    return matched / static_cast<double>(labels.size());
}

// Mutual information normalized by the geometric mean of the entropies,
// natural logs; 0 when either side has zero entropy.
inline double nmi(const Partition& p, const std::vector<int>& labels) {
    const auto cont = detail::contingency(p, labels);
    if (labels.empty()) throw std::invalid_argument("nmi: empty input");
    const int m = static_cast<int>(cont.size());
    const double n = static_cast<double>(labels.size());
    std::vector<double> row_sum(static_cast<std::size_t>(m), 0.0), col_sum(row_sum);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            row_sum[static_cast<std::size_t>(i)] += cont[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            col_sum[static_cast<std::size_t>(j)] += cont[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    double mi = 0.0, hp = 0.0, hq = 0.0;
    for (int i = 0; i < m; ++i) {
        if (row_sum[static_cast<std::size_t>(i)] > 0.0) {
            const double pi = row_sum[static_cast<std::size_t>(i)] / n;
            hp -= pi * std::log(pi);
        }
        if (col_sum[static_cast<std::size_t>(i)] > 0.0) {
            const double qi = col_sum[static_cast<std::size_t>(i)] / n;
            hq -= qi * std::log(qi);
        }
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double nij = cont[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (nij > 0.0)
                mi += (nij / n) * std::log(n * nij / (row_sum[static_cast<std::size_t>(i)] *
                                                      col_sum[static_cast<std::size_t>(j)]));
        }
    if (hp <= 0.0 || hq <= 0.0) return 0.0;
    return std::clamp(mi / std::sqrt(hp * hq), 0.0, 1.0);
}

// Mean silhouette over all points with Euclidean distance: (b-a)/max(a,b)
// where a is the mean distance within the point's cluster (self excluded)
// and b the smallest mean distance to another nonempty cluster. Points in
// singleton clusters score 0.
inline double silhouette(const DenseMatrix& z, const Partition& p) {
    p.validate();
    if (p.k < 2) throw std::invalid_argument("silhouette: needs at least 2 clusters");
    const int n = z.rows;
    if (static_cast<int>(p.assignments.size()) != n)
        throw std::invalid_argument("silhouette: partition covers " +
                                    std::to_string(p.assignments.size()) + " points, embedding has " +
                                    std::to_string(n) + " rows");
    std::vector<int> counts(static_cast<std::size_t>(p.k), 0);
    for (int a : p.assignments) ++counts[static_cast<std::size_t>(a)];
    int nonempty = 0;
    for (int c : counts) nonempty += c > 0 ? 1 : 0;
    if (nonempty < 2) throw std::invalid_argument("silhouette: needs at least 2 nonempty clusters");

    double total = 0.0;
    std::vector<double> mean_dist(static_cast<std::size_t>(p.k));
    for (int i = 0; i < n; ++i) {
        const int ci = p.assignments[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(ci)] == 1) continue;  // singleton scores 0
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            mean_dist[static_cast<std::size_t>(p.assignments[static_cast<std::size_t>(j)])] +=
                std::sqrt(detail::sq_dist(z.row(i), z.row(j), z.cols));
        }
        const double a = mean_dist[static_cast<std::size_t>(ci)] /
                         (counts[static_cast<std::size_t>(ci)] - 1);
        double b = std::numeric_limits<double>::max();
        for (int c = 0; c < p.k; ++c) {
            if (c == ci || counts[static_cast<std::size_t>(c)] == 0) continue;
            b = std::min(b, mean_dist[static_cast<std::size_t>(c)] / counts[static_cast<std::size_t>(c)]);
        }
        const double m = std::max(a, b);
        if (m > 0.0) total += (b - a) / m;
    }
    return total / n;
}

// Seeded uniform train/test split of n indices; train gets round(frac * n).
struct IndexSplit {
    std::vector<int> train;
    std::vector<int> test;
};

inline IndexSplit split_indices(int n, double train_frac, Rng& rng) {
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw std::invalid_argument("split fraction must be inside (0,1)");
    const int n_train = std::clamp(static_cast<int>(std::lround(train_frac * n)), 1, n - 1);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int t = 0; t < n_train; ++t) {
        const int pick = t + rng.uniform_int(n - t);
        std::swap(perm[static_cast<std::size_t>(t)], perm[static_cast<std::size_t>(pick)]);
    }
    IndexSplit split;
    split.train.assign(perm.begin(), perm.begin() + n_train);
    split.test.assign(perm.begin() + n_train, perm.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

inline DenseMatrix take_rows(const DenseMatrix& z, const std::vector<int>& idx) {
    DenseMatrix out(static_cast<int>(idx.size()), z.cols);
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy_n(z.row(idx[r]), z.cols, out.row(static_cast<int>(r)));
    return out;
}

inline std::vector<int> take_labels(const std::vector<int>& y, const std::vector<int>& idx) {
    std::vector<int> out(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) out[r] = y[static_cast<std::size_t>(idx[r])];
    return out;
}

}  // namespace mgl

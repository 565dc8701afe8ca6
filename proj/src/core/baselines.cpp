#include "core/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "core/error.hpp"

namespace conle {

Matrix baseline_softmax(const Matrix& logical) {
    Matrix out(logical.rows(), logical.cols());
    for (std::size_t r = 0; r < logical.rows(); ++r) {
        double mx = logical(r, 0);
        for (std::size_t j = 1; j < logical.cols(); ++j) mx = std::max(mx, logical(r, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logical.cols(); ++j) {
            out(r, j) = std::exp(logical(r, j) - mx);
            sum += out(r, j);
        }
        for (std::size_t j = 0; j < logical.cols(); ++j) out(r, j) /= sum;
    }
    return out;
}

namespace {

struct Neighbor {
    double dist_sq;
    std::size_t index;
};

}  // namespace

Matrix baseline_label_propagation(const LeDataset& dataset, std::size_t k_neighbors, double alpha,
                                  std::size_t iterations) {
    const std::size_t n = dataset.n();
    const std::size_t c = dataset.c();
    if (k_neighbors < 1 || k_neighbors >= n)
        fail(ErrorCode::invalid_argument, "label propagation: k_neighbors must be in [1, n)");
    if (alpha <= 0.0 || alpha >= 1.0)
        fail(ErrorCode::invalid_argument, "label propagation: alpha must be in (0, 1)");

    const Matrix& x = dataset.features;
    std::vector<std::vector<Neighbor>> knn(n);
    double mean_dist_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Neighbor> all;
        all.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double dsq = 0.0;
            for (std::size_t f = 0; f < x.cols(); ++f) {
                const double d = x(i, f) - x(j, f);
                dsq += d * d;
            }
            all.push_back({dsq, j});
        }
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k_neighbors),
                          all.end(), [](const Neighbor& a, const Neighbor& b) {
                              return a.dist_sq != b.dist_sq ? a.dist_sq < b.dist_sq
                                                           : a.index < b.index;
                          });
        all.resize(k_neighbors);
        for (const Neighbor& nb : all) mean_dist_sq += nb.dist_sq;
        knn[i] = std::move(all);
    }
    mean_dist_sq /= static_cast<double>(n * k_neighbors);
    const double bandwidth = std::max(mean_dist_sq, 1e-12);  // global Gaussian bandwidth

    // Row-normalized transition matrix restricted to kNN edges.
    Matrix p(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const Neighbor& nb : knn[i]) {
            const double w = std::exp(-nb.dist_sq / (2.0 * bandwidth));
            p(i, nb.index) = w;
            sum += w;
        }
        for (const Neighbor& nb : knn[i]) p(i, nb.index) /= sum;
    }

    Matrix f = dataset.logical;
    Matrix next(n, c);
    for (std::size_t it = 0; it < iterations; ++it) {
        double max_change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                double acc = 0.0;
                for (const Neighbor& nb : knn[i]) acc += p(i, nb.index) * f(nb.index, j);
                const double v = alpha * acc + (1.0 - alpha) * dataset.logical(i, j);
                max_change = std::max(max_change, std::abs(v - f(i, j)));
                next(i, j) = v;
            }
        }
        std::swap(f, next);
        if (max_change < 1e-8) break;
    }

    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += f(i, j);
        for (std::size_t j = 0; j < c; ++j) f(i, j) /= sum;
    }
    return f;
}

}  // namespace conle

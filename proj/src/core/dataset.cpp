#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

namespace conle {

std::vector<std::size_t> FoldPlan::fold_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::complement_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(i);
    return out;
}

void validate(const LeDataset& ds) {
    const std::size_t n = ds.features.rows();
    const std::size_t c = ds.logical.cols();
    if (n < 1 || ds.features.cols() < 1 || c < 1)
        fail(ErrorCode::invalid_argument, "dataset '" + ds.name + "': empty features or labels");
    if (ds.logical.rows() != n)
        fail(ErrorCode::dimension, "dataset '" + ds.name + "': features have " + std::to_string(n) +
                                       " rows but logical labels have " +
                                       std::to_string(ds.logical.rows()));
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < c; ++j) {
            const double v = ds.logical(r, j);
            if (v != 0.0 && v != 1.0)
                fail(ErrorCode::invalid_argument,
                     "logical row " + std::to_string(r) + ", column " + std::to_string(j) +
                         ": entry " + format_double(v) + " is not 0 or 1");
            ones += (v == 1.0);
        }
        if (ones == 0 || ones == c)
            fail(ErrorCode::invalid_argument,
                 "logical row " + std::to_string(r) +
                     (ones == 0 ? " has no relevant label" : " has no irrelevant label"));
    }
    if (ds.ground_truth) {
        const Matrix& gt = *ds.ground_truth;
        if (gt.rows() != n || gt.cols() != c)
            fail(ErrorCode::dimension, "ground truth is " + std::to_string(gt.rows()) + "x" +
                                           std::to_string(gt.cols()) + ", expected " +
                                           std::to_string(n) + "x" + std::to_string(c));
        for (std::size_t r = 0; r < n; ++r) {
            double sum = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                if (gt(r, j) < 0.0)
                    fail(ErrorCode::invalid_argument, "ground-truth row " + std::to_string(r) +
                                                          ", column " + std::to_string(j) +
                                                          " is negative");
                sum += gt(r, j);
            }
            if (std::abs(sum - 1.0) > 1e-6)
                fail(ErrorCode::invalid_argument,
                     "ground-truth row " + std::to_string(r) + " sums to " + format_double(sum));
        }
    }
}

void apply_zscore(Matrix& features) {
    const std::size_t n = features.rows();
    for (std::size_t j = 0; j < features.cols(); ++j) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += features(r, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = features(r, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        if (sd < 1e-12) {
            for (std::size_t r = 0; r < n; ++r) features(r, j) = 0.0;  // constant column
        } else {
            for (std::size_t r = 0; r < n; ++r) features(r, j) = (features(r, j) - mean) / sd;
        }
    }
}

LeDataset load_dataset(const std::string& features_path, const std::string& labels_path,
                       const std::optional<std::string>& ground_truth_path, Scaling scaling) {
    LeDataset ds;
    ds.name = std::filesystem::path(features_path).stem().string();
    // Conventionally '<name>_features.csv'; strip the suffix when present.
    const std::string suffix = "_features";
    if (ds.name.size() > suffix.size() &&
        ds.name.compare(ds.name.size() - suffix.size(), suffix.size(), suffix) == 0)
        ds.name.resize(ds.name.size() - suffix.size());

    ds.features = read_matrix_csv(features_path);
    ds.logical = read_matrix_csv(labels_path);
    if (ground_truth_path) ds.ground_truth = read_matrix_csv(*ground_truth_path);
    if (scaling == Scaling::zscore) {
        apply_zscore(ds.features);
        ds.scaling = Scaling::zscore;
    }
    validate(ds);
    return ds;
}

void save_dataset(const LeDataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_matrix_csv((base / (ds.name + "_features.csv")).string(), ds.features);
    write_matrix_csv((base / (ds.name + "_logical.csv")).string(), ds.logical);
    if (ds.ground_truth)
        write_matrix_csv((base / (ds.name + "_distribution.csv")).string(), *ds.ground_truth);
}

namespace {

std::size_t argmax_row(const Matrix& m, std::size_t r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j)
        if (m(r, j) > m(r, best)) best = j;
    return best;
}

std::size_t argmin_row(const Matrix& m, std::size_t r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j)
        if (m(r, j) < m(r, best)) best = j;
    return best;
}

}  // namespace

Matrix binarize(const Matrix& distributions, const BinarizationPolicy& policy,
                std::size_t* repaired) {
    const std::size_t n = distributions.rows();
    const std::size_t c = distributions.cols();
    if (policy.param <= 0.0)
        fail(ErrorCode::invalid_argument, "binarization param must be positive");
    if (policy.mode == BinarizeMode::top_k && policy.param >= static_cast<double>(c))
        fail(ErrorCode::invalid_argument, "top_k param must be smaller than the label count");

    Matrix out(n, c);
    std::size_t repairs = 0;
    for (std::size_t r = 0; r < n; ++r) {
        switch (policy.mode) {
            case BinarizeMode::threshold_over_uniform: {
                const double cutoff = policy.param / static_cast<double>(c);
                for (std::size_t j = 0; j < c; ++j) out(r, j) = distributions(r, j) >= cutoff ? 1.0 : 0.0;
                break;
            }
            case BinarizeMode::absolute_threshold: {
                for (std::size_t j = 0; j < c; ++j)
                    out(r, j) = distributions(r, j) >= policy.param ? 1.0 : 0.0;
                break;
            }
            case BinarizeMode::top_k: {
                const std::size_t k = static_cast<std::size_t>(policy.param);
                std::vector<std::size_t> order(c);
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                    return distributions(r, a) > distributions(r, b);
                });
                for (std::size_t i = 0; i < k; ++i) out(r, order[i]) = 1.0;
                break;
            }
        }
        if (policy.force_argmax_relevant) out(r, argmax_row(distributions, r)) = 1.0;

        std::size_t ones = 0;
        for (std::size_t j = 0; j < c; ++j) ones += (out(r, j) == 1.0);
        if (ones == 0) {
            out(r, argmax_row(distributions, r)) = 1.0;
            ++repairs;
        } else if (ones == c) {
            out(r, argmin_row(distributions, r)) = 0.0;
            ++repairs;
        }
    }
    if (repaired) *repaired = repairs;
    return out;
}

FoldPlan split_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > n)
        fail(ErrorCode::invalid_argument, "fold count k=" + std::to_string(k) +
                                              " out of range for n=" + std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, 0x0f01d5));
    rng.shuffle(order);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(n, 0);
    // First n % k folds take one extra sample.
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) plan.assignments[order[pos++]] = f;
    }
    return plan;
}

FoldPlan split_folds(const LeDataset& ds, std::size_t k, std::uint64_t seed) {
    return split_folds(ds.n(), k, seed);
}

LeDataset synth_generate(std::size_t n, std::size_t dim1, std::size_t c, std::uint64_t seed,
                         double noise) {
    if (n < 2 || dim1 < 2 || c < 2)
        fail(ErrorCode::invalid_argument, "synth_generate needs n, dim1, c >= 2");
    if (noise < 0.0) fail(ErrorCode::invalid_argument, "noise must be nonnegative");

    LeDataset ds;
    ds.name = "synth";

    Rng feat_rng(mix_seed(seed, 1));
    ds.features = Matrix(n, dim1);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < dim1; ++j) ds.features(r, j) = feat_rng.normal();

    // Fixed linear map; the gain keeps logits at roughly unit-to-few scale so
    // the softmax rows are peaked but never near-degenerate.
    Rng map_rng(mix_seed(seed, 2));
    const double gain = 2.0 / std::sqrt(static_cast<double>(dim1));
    Matrix w(c, dim1);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < dim1; ++j) w(i, j) = gain * map_rng.normal();

    Rng noise_rng(mix_seed(seed, 3));
    Matrix gt(n, c);
    std::vector<double> logits(c);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < c; ++i) {
            double z = 0.0;
            for (std::size_t j = 0; j < dim1; ++j) z += w(i, j) * ds.features(r, j);
            if (noise > 0.0) z += noise * noise_rng.normal();
            logits[i] = z;
        }
        const double mx = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (std::size_t i = 0; i < c; ++i) {
            gt(r, i) = std::exp(logits[i] - mx);
            sum += gt(r, i);
        }
        for (std::size_t i = 0; i < c; ++i) gt(r, i) /= sum;
    }

    ds.ground_truth = std::move(gt);
    ds.logical = binarize(*ds.ground_truth, BinarizationPolicy{});
    validate(ds);
    return ds;
}

}  // namespace conle

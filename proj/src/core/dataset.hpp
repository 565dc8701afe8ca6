#ifndef CONLE_CORE_DATASET_HPP
#define CONLE_CORE_DATASET_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace conle {

enum class Scaling { none, zscore };

/// One label-enhancement dataset: features X (n x dim1), binary logical
/// labels L (n x c) and, when available, ground-truth label distributions
/// (n x c, row-stochastic). Immutable after construction.
struct LeDataset {
    std::string name;
    Matrix features;
    Matrix logical;
    std::optional<Matrix> ground_truth;
    Scaling scaling = Scaling::none;

    std::size_t n() const noexcept { return features.rows(); }
    std::size_t dim1() const noexcept { return features.cols(); }
    std::size_t c() const noexcept { return logical.cols(); }
};

enum class BinarizeMode { threshold_over_uniform, top_k, absolute_threshold };

/// How logical labels are derived from ground-truth distributions.
///  - threshold_over_uniform: relevant iff degree >= param / c
///  - top_k: the param largest degrees are relevant (ties to lowest index)
///  - absolute_threshold: relevant iff degree >= param
/// force_argmax_relevant additionally marks each row's largest degree
/// relevant regardless of the cutoff.
struct BinarizationPolicy {
    BinarizeMode mode = BinarizeMode::threshold_over_uniform;
    double param = 1.0;
    bool force_argmax_relevant = false;
};

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;  // assignments[sample] = fold index
    std::uint64_t seed = 0;

    std::vector<std::size_t> fold_indices(std::size_t fold) const;
    std::vector<std::size_t> complement_indices(std::size_t fold) const;
};

/// Throws Error naming the offending row/column when an invariant fails:
/// consistent dimensions, strictly binary logical entries, each logical row
/// with at least one relevant and one irrelevant label, ground-truth rows
/// nonnegative and summing to 1 within 1e-6.
void validate(const LeDataset& ds);

/// Loads a dataset from header-free numeric CSVs. With Scaling::zscore every
/// non-constant feature column is shifted/scaled to mean 0, stddev 1
/// (population stddev); constant columns become all-zero.
LeDataset load_dataset(const std::string& features_path, const std::string& labels_path,
                       const std::optional<std::string>& ground_truth_path, Scaling scaling);

/// Writes <name>_features.csv, <name>_logical.csv and, when ground truth is
/// present, <name>_distribution.csv into `dir`.
void save_dataset(const LeDataset& ds, const std::string& dir);

/// Derives binary logical labels from row-stochastic distributions. Rows that
/// come out all-relevant get their smallest degree cleared; all-irrelevant
/// rows get their largest degree set. Ties resolve to the lowest index.
/// `repaired` (optional) receives the number of rows touched by that rule.
Matrix binarize(const Matrix& distributions, const BinarizationPolicy& policy,
                std::size_t* repaired = nullptr);

/// Seed-deterministic partition into k folds whose sizes differ by at most 1.
FoldPlan split_folds(std::size_t n, std::size_t k, std::uint64_t seed);
FoldPlan split_folds(const LeDataset& ds, std::size_t k, std::uint64_t seed);

/// Synthetic recovery benchmark: features are i.i.d. standard normal, ground
/// truth is softmax of a fixed random linear map of the features plus
/// Gaussian logit noise of scale `noise`, logical labels come from the
/// default binarization policy. Bit-reproducible from the seed.
LeDataset synth_generate(std::size_t n, std::size_t dim1, std::size_t c, std::uint64_t seed,
                         double noise);

void apply_zscore(Matrix& features);

}  // namespace conle

#endif

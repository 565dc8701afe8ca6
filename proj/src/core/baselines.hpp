#ifndef CONLE_CORE_BASELINES_HPP
#define CONLE_CORE_BASELINES_HPP

#include "core/dataset.hpp"
#include "core/matrix.hpp"

namespace conle {

/// Floor baseline: each row is the softmax of the 0/1 logical vector.
Matrix baseline_softmax(const Matrix& logical);

/// Generic graph label propagation over a row-normalized kNN
/// Gaussian-affinity graph on the features: F <- alpha * P * F + (1 - alpha) * L
/// from F0 = L, run for `iterations` steps or until the largest entry change
/// drops below 1e-8, then row-normalized to distributions.
Matrix baseline_label_propagation(const LeDataset& dataset, std::size_t k_neighbors, double alpha,
                                  std::size_t iterations);

}  // namespace conle

#endif

#ifndef CONLE_CORE_TRAINER_HPP
#define CONLE_CORE_TRAINER_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "core/conle_loss.hpp"
#include "core/dataset.hpp"
#include "core/mlp.hpp"

namespace conle {

struct TrainConfig {
    ConleConfig conle;
    double lr = 0.05;
    std::size_t max_epochs = 500;
    std::size_t batch_size = 256;  // 0 means full batch
    std::uint64_t seed = 1;
    double convergence_tol = 1e-3;
    std::size_t convergence_window = 10;
    std::vector<std::size_t> hidden_dims = {64};
    double leaky_slope = 0.01;
};

/// The three trained networks: F1 embeds features, F2 embeds logical labels,
/// F3 maps high-level features to label distributions.
struct TrainedModel {
    Mlp f1;
    Mlp f2;
    Mlp f3;
};

struct TrainReport {
    std::vector<LossBreakdown> loss_curve;  // one entry per epoch
    std::size_t epochs_run = 0;
    bool converged = false;
    double wall_time_seconds = 0.0;
    TrainConfig config;
};

/// Convergence rule: over the trailing `window` epoch totals, the spread
/// (max - min) relative to the latest magnitude is below `tol`. Recomputable
/// from the loss curve alone.
bool converged_at(std::span<const LossBreakdown> curve, std::size_t epoch, double tol,
                  std::size_t window);

/// Trains the three networks on the full dataset: per epoch, shuffle, then
/// per mini-batch compute the embeddings, the recovered distributions and
/// the active loss, and take one SGD step. Deterministic from config.seed.
std::pair<TrainedModel, TrainReport> train(const LeDataset& dataset, const TrainConfig& config);

/// Same, restricted to the given sample indices (used by k-fold evaluation).
std::pair<TrainedModel, TrainReport> train_subset(const LeDataset& dataset,
                                                  std::span<const std::size_t> indices,
                                                  const TrainConfig& config);

/// Recovered distributions for every sample, in index order.
Matrix recover_all(const TrainedModel& model, const LeDataset& dataset);
Matrix recover_subset(const TrainedModel& model, const LeDataset& dataset,
                      std::span<const std::size_t> indices);

}  // namespace conle

#endif

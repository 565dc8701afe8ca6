#include "core/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace conle {

bool converged_at(std::span<const LossBreakdown> curve, std::size_t epoch, double tol,
                  std::size_t window) {
    if (epoch + 1 < window) return false;
    double lo = curve[epoch].total, hi = curve[epoch].total;
    for (std::size_t e = epoch + 1 - window; e <= epoch; ++e) {
        lo = std::min(lo, curve[e].total);
        hi = std::max(hi, curve[e].total);
    }
    return (hi - lo) <= tol * std::max(std::abs(curve[epoch].total), 1e-12);
}

namespace {

void validate_train_config(const TrainConfig& cfg, std::size_t n) {
    if (n < 1) fail(ErrorCode::invalid_argument, "train: empty dataset");
    if (cfg.lr <= 0.0) fail(ErrorCode::invalid_argument, "train: lr must be positive");
    if (cfg.max_epochs < 1) fail(ErrorCode::invalid_argument, "train: max_epochs must be >= 1");
    if (cfg.convergence_tol <= 0.0)
        fail(ErrorCode::invalid_argument, "train: convergence_tol must be positive");
    if (cfg.convergence_window < 2)
        fail(ErrorCode::invalid_argument, "train: convergence_window must be >= 2");
    if (cfg.conle.tau_i <= 0.0) fail(ErrorCode::invalid_argument, "train: tau_i must be positive");
    if (cfg.conle.lambda1 < 0.0 || cfg.conle.lambda2 < 0.0)
        fail(ErrorCode::invalid_argument, "train: lambda1/lambda2 must be nonnegative");
    if (cfg.conle.epsilon < 0.0) fail(ErrorCode::invalid_argument, "train: epsilon must be >= 0");
    if (cfg.conle.dim2 < 1) fail(ErrorCode::invalid_argument, "train: dim2 must be >= 1");
    const bool contrastive = cfg.conle.variant != Variant::ablation_h;
    const std::size_t batch = cfg.batch_size == 0 ? n : cfg.batch_size;
    if (contrastive && batch < 2)
        fail(ErrorCode::invalid_argument,
             "train: the contrastive term needs batches of at least 2 samples");
}

std::vector<std::size_t> network_dims(std::size_t in, const std::vector<std::size_t>& hidden,
                                      std::size_t out) {
    std::vector<std::size_t> dims;
    dims.reserve(hidden.size() + 2);
    dims.push_back(in);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    return dims;
}

}  // namespace

std::pair<TrainedModel, TrainReport> train_subset(const LeDataset& dataset,
                                                  std::span<const std::size_t> indices,
                                                  const TrainConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = indices.size();
    validate_train_config(config, n);

    const std::size_t dim1 = dataset.dim1();
    const std::size_t c = dataset.c();
    TrainedModel model{
        init_mlp(network_dims(dim1, config.hidden_dims, config.conle.dim2), config.leaky_slope,
                 OutputHead::linear, mix_seed(config.seed, 11)),
        init_mlp(network_dims(c, config.hidden_dims, config.conle.dim2), config.leaky_slope,
                 OutputHead::linear, mix_seed(config.seed, 12)),
        init_mlp(network_dims(2 * config.conle.dim2, config.hidden_dims, c), config.leaky_slope,
                 OutputHead::softmax, mix_seed(config.seed, 13)),
    };

    TrainReport report;
    report.config = config;

    const std::size_t batch = std::min(config.batch_size == 0 ? n : config.batch_size, n);
    const bool contrastive = config.conle.variant != Variant::ablation_h;

    std::vector<std::size_t> order(indices.begin(), indices.end());
    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        // Fresh shuffle stream per epoch so the schedule is a pure function
        // of (seed, epoch).
        Rng shuffle_rng(mix_seed(config.seed, 20, epoch));
        shuffle_rng.shuffle(order);

        LossBreakdown epoch_loss;
        std::size_t pos = 0;
        while (pos < n) {
            std::size_t size = std::min(batch, n - pos);
            // A trailing single sample cannot carry the contrastive term;
            // fold it into the previous batch instead of dropping it.
            if (contrastive && size == 1 && pos > 0) {
                pos -= batch;
                size = batch + 1;
            }
            const std::span<const std::size_t> slice(order.data() + pos, size);
            const Matrix bx = take_rows(dataset.features, slice);
            const Matrix bl = take_rows(dataset.logical, slice);

            ConleGradients grads;
            try {
                grads = loss_gradients(model.f1, model.f2, model.f3, bx, bl, config.conle);
                sgd_step(model.f1, grads.f1, config.lr);
                sgd_step(model.f2, grads.f2, config.lr);
                sgd_step(model.f3, grads.f3, config.lr);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::diverged)
                    fail(ErrorCode::diverged,
                         "training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
                throw;
            }

            const double w = static_cast<double>(size) / static_cast<double>(n);
            epoch_loss.l_con += w * grads.loss.l_con;
            epoch_loss.l_dis += w * grads.loss.l_dis;
            epoch_loss.l_thr += w * grads.loss.l_thr;
            epoch_loss.l_att += w * grads.loss.l_att;
            epoch_loss.total += w * grads.loss.total;
            pos += size;
        }

        report.loss_curve.push_back(epoch_loss);
        report.epochs_run = epoch + 1;
        if (converged_at(report.loss_curve, epoch, config.convergence_tol,
                         config.convergence_window)) {
            report.converged = true;
            break;
        }
    }

    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(model), std::move(report)};
}

std::pair<TrainedModel, TrainReport> train(const LeDataset& dataset, const TrainConfig& config) {
    std::vector<std::size_t> all(dataset.n());
    std::iota(all.begin(), all.end(), 0);
    return train_subset(dataset, all, config);
}

Matrix recover_subset(const TrainedModel& model, const LeDataset& dataset,
                      std::span<const std::size_t> indices) {
    const Matrix bx = take_rows(dataset.features, indices);
    const Matrix bl = take_rows(dataset.logical, indices);
    const Embeddings e = embed(model.f1, model.f2, bx, bl);
    return recover(model.f3, e.h);
}

Matrix recover_all(const TrainedModel& model, const LeDataset& dataset) {
    std::vector<std::size_t> all(dataset.n());
    std::iota(all.begin(), all.end(), 0);
    return recover_subset(model, dataset, all);
}

}  // namespace conle

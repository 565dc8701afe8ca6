#ifndef CONLE_CORE_CONLE_LOSS_HPP
#define CONLE_CORE_CONLE_LOSS_HPP

#include <cstddef>
#include <span>

#include "core/matrix.hpp"
#include "core/mlp.hpp"

namespace conle {

enum class Variant { full, ablation_h, ablation_l };
enum class ThresholdForm { simplified_eq14, pairwise_eq13 };

struct ConleConfig {
    double tau_i = 0.5;     // instance-level contrastive temperature
    double lambda1 = 0.5;   // weight of the distance term
    double lambda2 = 1.0;   // weight of the threshold term
    double epsilon = 0.01;  // threshold margin
    std::size_t dim2 = 64;  // projection dimension
    Variant variant = Variant::full;
    ThresholdForm threshold_form = ThresholdForm::simplified_eq14;
    // The instance-level loss as defined here excludes the positive pair from
    // its denominator; this switch restores the more common form that
    // includes it.
    bool include_positive_in_denominator = false;
};

/// Projection-space views of one batch: Z embeds the features, Q the logical
/// labels, H is their row-wise concatenation.
struct Embeddings {
    Matrix z;
    Matrix q;
    Matrix h;
};

struct LossBreakdown {
    double l_con = 0.0;
    double l_dis = 0.0;
    double l_thr = 0.0;
    double l_att = 0.0;  // lambda1 * l_dis + lambda2 * l_thr
    double total = 0.0;
};

Embeddings embed(const Mlp& f1, const Mlp& f2, const Matrix& features, const Matrix& logical);

/// Cosine similarity with norms floored at 1e-12, so zero vectors yield 0.
double cosine_sim(std::span<const double> u, std::span<const double> v);

/// Pairwise cosine similarities between batch rows. zq(m, s) is the
/// similarity of Z row m and Q row s; zz and qq are the within-view
/// similarities (symmetric, diagonal unused).
struct PairSims {
    Matrix zz;
    Matrix zq;
    Matrix qq;
};

PairSims pairwise_cosine(const Matrix& z, const Matrix& q);

/// Instance-level contrastive loss, mean over the batch. Each sample's two
/// view embeddings form the positive pair; every other sample's views are
/// negatives. Log-sum-exp stabilized.
double contrastive_loss(const Matrix& z, const Matrix& q, double tau,
                        bool include_positive = false);
double contrastive_from_sims(const PairSims& sims, double tau, bool include_positive = false);

/// Label distributions from high-level features; f3 must have a softmax head.
Matrix recover(const Mlp& f3, const Matrix& h);

/// Squared Euclidean distance between recovered distributions and logical
/// labels, summed over the batch.
double distance_loss(const Matrix& recovered, const Matrix& logical);

/// Hinge penalty forcing relevant degrees above irrelevant ones by margin
/// epsilon, mean over the batch. simplified_eq14 penalizes only the worst
/// (max-irrelevant, min-relevant) pair per sample; pairwise_eq13 sums over
/// all relevant-irrelevant pairs. Rows without both a relevant and an
/// irrelevant label contribute 0 and are counted in `degenerate_rows`.
double threshold_loss(const Matrix& recovered, const Matrix& logical, double epsilon,
                      ThresholdForm form, std::size_t* degenerate_rows = nullptr);

/// Assembles the breakdown for the active variant:
///   full:       total = l_con + lambda1*l_dis + lambda2*l_thr
///   ablation_h: total =         lambda1*l_dis + lambda2*l_thr
///   ablation_l: total = l_con + lambda1*l_dis
LossBreakdown total_loss(double l_con, double l_dis, double l_thr, const ConleConfig& config);

/// Forward pass shared by training and gradient checking.
struct ConleForward {
    ForwardTrace f1_trace;
    ForwardTrace f2_trace;
    ForwardTrace f3_trace;
    Matrix h;

    const Matrix& z() const { return f1_trace.outputs(); }
    const Matrix& q() const { return f2_trace.outputs(); }
    const Matrix& recovered() const { return f3_trace.outputs(); }
};

ConleForward conle_forward(const Mlp& f1, const Mlp& f2, const Mlp& f3, const Matrix& features,
                           const Matrix& logical);

/// Loss breakdown only, no gradients. All three component losses are always
/// reported; the variant decides which ones enter `total`.
LossBreakdown conle_loss_value(const Mlp& f1, const Mlp& f2, const Mlp& f3,
                               const Matrix& features, const Matrix& logical,
                               const ConleConfig& config);

struct ConleGradients {
    Gradients f1;
    Gradients f2;
    Gradients f3;
    LossBreakdown loss;
};

/// Exact analytic gradients of the active variant's total loss with respect
/// to all three parameter sets. The contrastive term reaches F1 and F2; the
/// distance and threshold terms reach F3 and flow on through H into F1 and
/// F2. Throws Error{diverged} on non-finite intermediates.
ConleGradients loss_gradients(const Mlp& f1, const Mlp& f2, const Mlp& f3,
                              const Matrix& features, const Matrix& logical,
                              const ConleConfig& config);

}  // namespace conle

#endif

#include "core/conle_loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/error.hpp"

namespace conle {

namespace {

constexpr double kNormFloor = 1e-12;

std::vector<double> row_norms(const Matrix& m) {
    std::vector<double> norms(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double sq = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) sq += m(r, c) * m(r, c);
        norms[r] = std::max(std::sqrt(sq), kNormFloor);
    }
    return norms;
}

double dot_rows(const Matrix& a, std::size_t ra, const Matrix& b, std::size_t rb) {
    double d = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) d += a(ra, c) * b(rb, c);
    return d;
}

}  // namespace

double cosine_sim(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) fail(ErrorCode::dimension, "cosine_sim: length mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    return dot / (std::max(std::sqrt(nu), kNormFloor) * std::max(std::sqrt(nv), kNormFloor));
}

Embeddings embed(const Mlp& f1, const Mlp& f2, const Matrix& features, const Matrix& logical) {
    if (features.rows() != logical.rows())
        fail(ErrorCode::dimension, "embed: feature and label batches differ in height");
    if (f1.output_dim() != f2.output_dim())
        fail(ErrorCode::dimension, "embed: projection dims of F1 and F2 differ");
    Embeddings e;
    e.z = forward(f1, features).outputs();
    e.q = forward(f2, logical).outputs();
    e.h = hconcat(e.z, e.q);
    return e;
}

PairSims pairwise_cosine(const Matrix& z, const Matrix& q) {
    if (!z.same_shape(q)) fail(ErrorCode::dimension, "pairwise_cosine: Z and Q shapes differ");
    const std::size_t b = z.rows();
    const std::vector<double> nz = row_norms(z);
    const std::vector<double> nq = row_norms(q);
    PairSims sims{Matrix(b, b), Matrix(b, b), Matrix(b, b)};
    for (std::size_t m = 0; m < b; ++m) {
        for (std::size_t s = 0; s < b; ++s) {
            sims.zq(m, s) = dot_rows(z, m, q, s) / (nz[m] * nq[s]);
            if (s > m) {
                sims.zz(m, s) = dot_rows(z, m, z, s) / (nz[m] * nz[s]);
                sims.zz(s, m) = sims.zz(m, s);
                sims.qq(m, s) = dot_rows(q, m, q, s) / (nq[m] * nq[s]);
                sims.qq(s, m) = sims.qq(m, s);
            }
        }
        sims.zz(m, m) = 1.0;
        sims.qq(m, m) = 1.0;
    }
    return sims;
}

namespace {

// One anchor's log-denominator: log sum of exp(sim/tau) over the 2(b-1)
// negative-view terms (plus the positive pair when include_positive is set).
// `own` holds the anchor's similarities to its own view, `cross` to the other
// view; the cross diagonal entry is the positive pair.
struct LogSumExp {
    double value;
    double max_arg;
    double sum_shifted;
};

LogSumExp denominator(const Matrix& own, const Matrix& cross, std::size_t m, double tau,
                      bool include_positive, bool cross_transposed) {
    const std::size_t b = own.rows();
    double mx = -std::numeric_limits<double>::infinity();
    const auto cross_at = [&](std::size_t s) { return cross_transposed ? cross(s, m) : cross(m, s); };
    for (std::size_t s = 0; s < b; ++s) {
        if (s == m) continue;
        mx = std::max(mx, own(m, s) / tau);
        mx = std::max(mx, cross_at(s) / tau);
    }
    if (include_positive) mx = std::max(mx, cross_at(m) / tau);
    double sum = 0.0;
    for (std::size_t s = 0; s < b; ++s) {
        if (s == m) continue;
        sum += std::exp(own(m, s) / tau - mx);
        sum += std::exp(cross_at(s) / tau - mx);
    }
    if (include_positive) sum += std::exp(cross_at(m) / tau - mx);
    return {mx + std::log(sum), mx, sum};
}

}  // namespace

double contrastive_from_sims(const PairSims& sims, double tau, bool include_positive) {
    const std::size_t b = sims.zz.rows();
    if (b < 2) fail(ErrorCode::invalid_argument, "contrastive loss needs a batch of at least 2");
    if (tau <= 0.0) fail(ErrorCode::invalid_argument, "temperature must be positive");

    double total = 0.0;
    for (std::size_t m = 0; m < b; ++m) {
        const double pos = sims.zq(m, m) / tau;
        const double l_z = -pos + denominator(sims.zz, sims.zq, m, tau, include_positive, false).value;
        const double l_q = -pos + denominator(sims.qq, sims.zq, m, tau, include_positive, true).value;
        total += l_z + l_q;
    }
    return total / static_cast<double>(b);
}

double contrastive_loss(const Matrix& z, const Matrix& q, double tau, bool include_positive) {
    return contrastive_from_sims(pairwise_cosine(z, q), tau, include_positive);
}

Matrix recover(const Mlp& f3, const Matrix& h) {
    if (f3.head != OutputHead::softmax)
        fail(ErrorCode::invalid_argument, "recover: F3 must have a softmax head");
    if (h.rows() == 0) return Matrix(0, f3.output_dim());
    return forward(f3, h).outputs();
}

double distance_loss(const Matrix& recovered, const Matrix& logical) {
    if (!recovered.same_shape(logical))
        fail(ErrorCode::dimension, "distance_loss: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < recovered.storage().size(); ++i) {
        const double d = recovered.storage()[i] - logical.storage()[i];
        sum += d * d;
    }
    return sum;
}

namespace {

struct RowSplit {
    bool valid = false;          // has both a relevant and an irrelevant label
    std::size_t min_pos = 0;     // relevant label with the smallest degree
    std::size_t max_neg = 0;     // irrelevant label with the largest degree
};

RowSplit split_row(const Matrix& recovered, const Matrix& logical, std::size_t r) {
    RowSplit out;
    bool has_pos = false, has_neg = false;
    for (std::size_t j = 0; j < logical.cols(); ++j) {
        if (logical(r, j) == 1.0) {
            if (!has_pos || recovered(r, j) < recovered(r, out.min_pos)) out.min_pos = j;
            has_pos = true;
        } else {
            if (!has_neg || recovered(r, j) > recovered(r, out.max_neg)) out.max_neg = j;
            has_neg = true;
        }
    }
    out.valid = has_pos && has_neg;
    return out;
}

}  // namespace

double threshold_loss(const Matrix& recovered, const Matrix& logical, double epsilon,
                      ThresholdForm form, std::size_t* degenerate_rows) {
    if (!recovered.same_shape(logical))
        fail(ErrorCode::dimension, "threshold_loss: shape mismatch");
    const std::size_t n = recovered.rows();
    const std::size_t c = recovered.cols();
    double sum = 0.0;
    std::size_t degenerate = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const RowSplit split = split_row(recovered, logical, r);
        if (!split.valid) {
            ++degenerate;
            continue;
        }
        if (form == ThresholdForm::simplified_eq14) {
            sum += std::max(recovered(r, split.max_neg) - recovered(r, split.min_pos) + epsilon, 0.0);
        } else {
            for (std::size_t jp = 0; jp < c; ++jp) {
                if (logical(r, jp) != 1.0) continue;
                for (std::size_t jn = 0; jn < c; ++jn) {
                    if (logical(r, jn) == 1.0) continue;
                    sum += std::max(recovered(r, jn) - recovered(r, jp) + epsilon, 0.0);
                }
            }
        }
    }
    if (degenerate_rows) *degenerate_rows = degenerate;
    return sum / static_cast<double>(n);
}

LossBreakdown total_loss(double l_con, double l_dis, double l_thr, const ConleConfig& config) {
    LossBreakdown out;
    out.l_con = l_con;
    out.l_dis = l_dis;
    out.l_thr = l_thr;
    out.l_att = config.lambda1 * l_dis + config.lambda2 * l_thr;
    switch (config.variant) {
        case Variant::full: out.total = l_con + out.l_att; break;
        case Variant::ablation_h: out.total = out.l_att; break;
        case Variant::ablation_l: out.total = config.lambda1 * l_dis + l_con; break;
    }
    return out;
}

ConleForward conle_forward(const Mlp& f1, const Mlp& f2, const Mlp& f3, const Matrix& features,
                           const Matrix& logical) {
    if (features.rows() != logical.rows())
        fail(ErrorCode::dimension, "conle_forward: batch heights differ");
    if (f1.output_dim() != f2.output_dim())
        fail(ErrorCode::dimension, "conle_forward: projection dims of F1 and F2 differ");
    if (f3.input_dim() != 2 * f1.output_dim())
        fail(ErrorCode::dimension, "conle_forward: F3 input dim must be twice the projection dim");
    if (f3.head != OutputHead::softmax)
        fail(ErrorCode::invalid_argument, "conle_forward: F3 must have a softmax head");
    if (f3.output_dim() != logical.cols())
        fail(ErrorCode::dimension, "conle_forward: F3 output dim must match the label count");

    ConleForward fw;
    fw.f1_trace = forward(f1, features);
    fw.f2_trace = forward(f2, logical);
    fw.h = hconcat(fw.f1_trace.outputs(), fw.f2_trace.outputs());
    fw.f3_trace = forward(f3, fw.h);
    return fw;
}

namespace {

bool variant_has_contrastive(Variant v) { return v != Variant::ablation_h; }
bool variant_has_threshold(Variant v) { return v != Variant::ablation_l; }

LossBreakdown breakdown_from_forward(const ConleForward& fw, const Matrix& logical,
                                     const ConleConfig& config) {
    const double l_con =
        fw.z().rows() >= 2
            ? contrastive_loss(fw.z(), fw.q(), config.tau_i, config.include_positive_in_denominator)
            : 0.0;
    const double l_dis = distance_loss(fw.recovered(), logical);
    const double l_thr =
        threshold_loss(fw.recovered(), logical, config.epsilon, config.threshold_form);
    return total_loss(l_con, l_dis, l_thr, config);
}

/// Accumulates d(loss)/d(cosine(u_row of U, v_row of V)) * coeff into the
/// embedding gradients via the cosine Jacobian.
void add_cosine_grad(const Matrix& u, const Matrix& v, const std::vector<double>& nu,
                     const std::vector<double>& nv, std::size_t m, std::size_t s, double sim,
                     double coeff, Matrix& du, Matrix& dv) {
    const double inv = 1.0 / (nu[m] * nv[s]);
    const double um_scale = sim / (nu[m] * nu[m]);
    const double vs_scale = sim / (nv[s] * nv[s]);
    for (std::size_t c = 0; c < u.cols(); ++c) {
        du(m, c) += coeff * (v(s, c) * inv - um_scale * u(m, c));
        dv(s, c) += coeff * (u(m, c) * inv - vs_scale * v(s, c));
    }
}

/// Contrastive gradient with respect to Z and Q, added into dz/dq.
void contrastive_backward(const Matrix& z, const Matrix& q, const ConleConfig& config, Matrix& dz,
                          Matrix& dq) {
    const std::size_t b = z.rows();
    if (b < 2) fail(ErrorCode::invalid_argument, "contrastive loss needs a batch of at least 2");
    const bool incl = config.include_positive_in_denominator;
    const double tau = config.tau_i;

    const PairSims sims = pairwise_cosine(z, q);
    const std::vector<double> nz = row_norms(z);
    const std::vector<double> nq = row_norms(q);

    // Coefficients on each pairwise similarity; scale applied at scatter time.
    Matrix gzz(b, b), gzq(b, b), gqq(b, b);
    for (std::size_t m = 0; m < b; ++m) {
        gzq(m, m) -= 2.0;  // the two positive-pair numerator terms

        const LogSumExp den_z = denominator(sims.zz, sims.zq, m, tau, incl, false);
        for (std::size_t s = 0; s < b; ++s) {
            if (s == m) continue;
            gzz(m, s) += std::exp(sims.zz(m, s) / tau - den_z.max_arg) / den_z.sum_shifted;
            gzq(m, s) += std::exp(sims.zq(m, s) / tau - den_z.max_arg) / den_z.sum_shifted;
        }
        if (incl) gzq(m, m) += std::exp(sims.zq(m, m) / tau - den_z.max_arg) / den_z.sum_shifted;

        const LogSumExp den_q = denominator(sims.qq, sims.zq, m, tau, incl, true);
        for (std::size_t s = 0; s < b; ++s) {
            if (s == m) continue;
            gqq(m, s) += std::exp(sims.qq(m, s) / tau - den_q.max_arg) / den_q.sum_shifted;
            gzq(s, m) += std::exp(sims.zq(s, m) / tau - den_q.max_arg) / den_q.sum_shifted;
        }
        if (incl) gzq(m, m) += std::exp(sims.zq(m, m) / tau - den_q.max_arg) / den_q.sum_shifted;
    }

    const double scale = 1.0 / (static_cast<double>(b) * tau);
    for (std::size_t m = 0; m < b; ++m) {
        for (std::size_t s = 0; s < b; ++s) {
            if (gzq(m, s) != 0.0)
                add_cosine_grad(z, q, nz, nq, m, s, sims.zq(m, s), scale * gzq(m, s), dz, dq);
            if (s == m) continue;
            if (gzz(m, s) != 0.0)
                add_cosine_grad(z, z, nz, nz, m, s, sims.zz(m, s), scale * gzz(m, s), dz, dz);
            if (gqq(m, s) != 0.0)
                add_cosine_grad(q, q, nq, nq, m, s, sims.qq(m, s), scale * gqq(m, s), dq, dq);
        }
    }
}

/// d(threshold_loss)/d(recovered), added into dd with weight `coeff`.
void threshold_backward(const Matrix& recovered, const Matrix& logical, double epsilon,
                        ThresholdForm form, double coeff, Matrix& dd) {
    const std::size_t n = recovered.rows();
    const std::size_t c = recovered.cols();
    const double per_row = coeff / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const RowSplit split = split_row(recovered, logical, r);
        if (!split.valid) continue;
        if (form == ThresholdForm::simplified_eq14) {
            const double margin =
                recovered(r, split.max_neg) - recovered(r, split.min_pos) + epsilon;
            if (margin > 0.0) {
                dd(r, split.max_neg) += per_row;
                dd(r, split.min_pos) -= per_row;
            }
        } else {
            for (std::size_t jp = 0; jp < c; ++jp) {
                if (logical(r, jp) != 1.0) continue;
                for (std::size_t jn = 0; jn < c; ++jn) {
                    if (logical(r, jn) == 1.0) continue;
                    if (recovered(r, jn) - recovered(r, jp) + epsilon > 0.0) {
                        dd(r, jn) += per_row;
                        dd(r, jp) -= per_row;
                    }
                }
            }
        }
    }
}

}  // namespace

LossBreakdown conle_loss_value(const Mlp& f1, const Mlp& f2, const Mlp& f3,
                               const Matrix& features, const Matrix& logical,
                               const ConleConfig& config) {
    const ConleForward fw = conle_forward(f1, f2, f3, features, logical);
    return breakdown_from_forward(fw, logical, config);
}

ConleGradients loss_gradients(const Mlp& f1, const Mlp& f2, const Mlp& f3, const Matrix& features,
                              const Matrix& logical, const ConleConfig& config) {
    const ConleForward fw = conle_forward(f1, f2, f3, features, logical);
    const std::size_t b = features.rows();
    const Matrix& recovered = fw.recovered();

    ConleGradients out;
    out.loss = breakdown_from_forward(fw, logical, config);
    if (!std::isfinite(out.loss.total))
        fail(ErrorCode::diverged, "non-finite loss");

    // d(total)/d(recovered) from the label-consistency terms.
    Matrix dd(recovered.rows(), recovered.cols());
    if (config.lambda1 > 0.0) {
        const double w = 2.0 * config.lambda1;
        for (std::size_t i = 0; i < dd.storage().size(); ++i)
            dd.storage()[i] = w * (recovered.storage()[i] - logical.storage()[i]);
    }
    if (variant_has_threshold(config.variant) && config.lambda2 > 0.0)
        threshold_backward(recovered, logical, config.epsilon, config.threshold_form,
                           config.lambda2, dd);

    // Through F3 into the high-level features.
    Matrix dh;
    out.f3 = backward(f3, fw.f3_trace, dd, &dh);

    // Split dH into the two projection views.
    const std::size_t dim2 = f1.output_dim();
    Matrix dz(b, dim2), dq(b, dim2);
    for (std::size_t r = 0; r < b; ++r)
        for (std::size_t c = 0; c < dim2; ++c) {
            dz(r, c) = dh(r, c);
            dq(r, c) = dh(r, dim2 + c);
        }

    if (variant_has_contrastive(config.variant))
        contrastive_backward(fw.z(), fw.q(), config, dz, dq);

    out.f1 = backward(f1, fw.f1_trace, dz);
    out.f2 = backward(f2, fw.f2_trace, dq);
    return out;
}

}  // namespace conle

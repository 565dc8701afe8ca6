#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/csv.hpp"
#include "core/error.hpp"

namespace conle {

const char* measure_name(Measure m) {
    switch (m) {
        case Measure::kl: return "kl";
        case Measure::chebyshev: return "chebyshev";
        case Measure::clark: return "clark";
        case Measure::canberra: return "canberra";
        case Measure::cosine: return "cosine";
        case Measure::intersection: return "intersection";
    }
    return "?";
}

bool lower_is_better(Measure m) {
    return m == Measure::kl || m == Measure::chebyshev || m == Measure::clark ||
           m == Measure::canberra;
}

double MetricReport::get(Measure m) const {
    switch (m) {
        case Measure::kl: return kl;
        case Measure::chebyshev: return chebyshev;
        case Measure::clark: return clark;
        case Measure::canberra: return canberra;
        case Measure::cosine: return cosine;
        case Measure::intersection: return intersection;
    }
    return 0.0;
}

std::array<double, 6> MetricReport::values() const {
    return {kl, chebyshev, clark, canberra, cosine, intersection};
}

namespace {

constexpr double kKlFloor = 1e-12;

void check_stochastic(std::span<const double> d, const char* which) {
    double sum = 0.0;
    for (double v : d) {
        if (v < -1e-9)
            fail(ErrorCode::invalid_argument,
                 std::string(which) + " distribution has negative entry " + format_double(v));
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        fail(ErrorCode::invalid_argument,
             std::string(which) + " distribution sums to " + format_double(sum));
}

double kl_divergence(std::span<const double> d, std::span<const double> d_hat) {
    double sum = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
        if (d[j] <= 0.0) continue;  // 0 * ln(0/x) = 0
        sum += d[j] * std::log(d[j] / std::max(d_hat[j], kKlFloor));
    }
    return sum;
}

}  // namespace

double metric_pair(std::span<const double> d, std::span<const double> d_hat, Measure which,
                   const MetricOptions& options) {
    if (d.size() != d_hat.size())
        fail(ErrorCode::dimension, "metric_pair: distribution lengths differ");
    if (d.size() < 2) fail(ErrorCode::invalid_argument, "metric_pair: need at least 2 labels");
    check_stochastic(d, "first");
    check_stochastic(d_hat, "second");

    switch (which) {
        case Measure::kl:
            return options.kl_swap_direction ? kl_divergence(d_hat, d) : kl_divergence(d, d_hat);
        case Measure::chebyshev: {
            double mx = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j)
                mx = std::max(mx, std::abs(d[j] - d_hat[j]));
            return mx;
        }
        case Measure::clark: {
            double sum = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) {
                const double denom = d[j] + d_hat[j];
                if (denom == 0.0) continue;
                const double t = (d[j] - d_hat[j]) / denom;
                sum += t * t;
            }
            return std::sqrt(sum);
        }
        case Measure::canberra: {
            double sum = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) {
                const double denom = d[j] + d_hat[j];
                if (denom == 0.0) continue;
                const double num = std::abs(d[j] - d_hat[j]);
                sum += (options.canberra_squared_numerator ? num * num : num) / denom;
            }
            return sum;
        }
        case Measure::cosine: {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) {
                dot += d[j] * d_hat[j];
                na += d[j] * d[j];
                nb += d_hat[j] * d_hat[j];
            }
            return dot / (std::max(std::sqrt(na), 1e-12) * std::max(std::sqrt(nb), 1e-12));
        }
        case Measure::intersection: {
            double sum = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) sum += std::min(d[j], d_hat[j]);
            return sum;
        }
    }
    fail(ErrorCode::internal, "metric_pair: unknown measure");
}

MetricReport evaluate(const Matrix& recovered, const Matrix& ground_truth,
                      const MetricOptions& options) {
    if (!recovered.same_shape(ground_truth))
        fail(ErrorCode::dimension, "evaluate: recovered is " + std::to_string(recovered.rows()) +
                                       "x" + std::to_string(recovered.cols()) +
                                       " but ground truth is " +
                                       std::to_string(ground_truth.rows()) + "x" +
                                       std::to_string(ground_truth.cols()));
    const std::size_t n = recovered.rows();
    if (n == 0) fail(ErrorCode::invalid_argument, "evaluate: empty matrices");

    MetricReport report;
    report.n = n;
    for (std::size_t r = 0; r < n; ++r) {
        const auto gt = ground_truth.row(r);
        const auto rec = recovered.row(r);
        report.kl += metric_pair(gt, rec, Measure::kl, options);
        report.chebyshev += metric_pair(gt, rec, Measure::chebyshev, options);
        report.clark += metric_pair(gt, rec, Measure::clark, options);
        report.canberra += metric_pair(gt, rec, Measure::canberra, options);
        report.cosine += metric_pair(gt, rec, Measure::cosine, options);
        report.intersection += metric_pair(gt, rec, Measure::intersection, options);
    }
    const double inv = 1.0 / static_cast<double>(n);
    report.kl *= inv;
    report.chebyshev *= inv;
    report.clark *= inv;
    report.canberra *= inv;
    report.cosine *= inv;
    report.intersection *= inv;
    return report;
}

std::vector<double> rank_values(std::span<const double> values, bool lower_better) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lower_better ? values[a] < values[b] : values[a] > values[b];
    });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // Positions i..j (0-based) are tied; they share the mean 1-based rank.
        const double mean_rank = static_cast<double>(i + j + 2) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

RankTable average_ranks(const std::vector<std::string>& methods,
                        const std::vector<std::string>& datasets,
                        const std::vector<std::vector<std::vector<double>>>& values) {
    if (methods.size() < 2) fail(ErrorCode::invalid_argument, "average_ranks: need >= 2 methods");
    if (datasets.empty()) fail(ErrorCode::invalid_argument, "average_ranks: need >= 1 dataset");
    if (values.size() != kAllMeasures.size())
        fail(ErrorCode::dimension, "average_ranks: expected one value table per measure");

    RankTable table;
    table.methods = methods;
    table.datasets = datasets;
    table.values = values;
    table.ranks.resize(kAllMeasures.size());
    table.average_rank.assign(kAllMeasures.size(), std::vector<double>(methods.size(), 0.0));

    for (std::size_t mi = 0; mi < kAllMeasures.size(); ++mi) {
        if (values[mi].size() != datasets.size())
            fail(ErrorCode::dimension, "average_ranks: missing dataset rows for measure " +
                                           std::string(measure_name(kAllMeasures[mi])));
        table.ranks[mi].resize(datasets.size());
        for (std::size_t di = 0; di < datasets.size(); ++di) {
            if (values[mi][di].size() != methods.size())
                fail(ErrorCode::dimension, "average_ranks: missing method cell in dataset " +
                                               datasets[di]);
            table.ranks[mi][di] =
                rank_values(values[mi][di], lower_is_better(kAllMeasures[mi]));
            for (std::size_t me = 0; me < methods.size(); ++me)
                table.average_rank[mi][me] += table.ranks[mi][di][me];
        }
        for (std::size_t me = 0; me < methods.size(); ++me)
            table.average_rank[mi][me] /= static_cast<double>(datasets.size());
    }
    return table;
}

}  // namespace conle

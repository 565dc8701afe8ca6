#ifndef CONLE_CORE_METRICS_HPP
#define CONLE_CORE_METRICS_HPP

#include <array>
#include <span>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace conle {

enum class Measure { kl, chebyshev, clark, canberra, cosine, intersection };

inline constexpr std::array<Measure, 6> kAllMeasures = {
    Measure::kl,       Measure::chebyshev, Measure::clark,
    Measure::canberra, Measure::cosine,    Measure::intersection,
};

const char* measure_name(Measure m);

/// True for the four distance measures (smaller is better), false for the
/// two similarities.
bool lower_is_better(Measure m);

struct MetricOptions {
    // The Canberra metric conventionally uses |d - dhat| in the numerator; a
    // squared-numerator variant exists and is kept behind this switch.
    bool canberra_squared_numerator = false;
    // KL is computed as KL(true || recovered); this swaps the direction.
    bool kl_swap_direction = false;
};

/// The six distribution-comparison measures, means over samples. Distances
/// are 0 and similarities 1 when recovered equals ground truth.
struct MetricReport {
    double kl = 0.0;
    double chebyshev = 0.0;
    double clark = 0.0;
    double canberra = 0.0;
    double cosine = 0.0;
    double intersection = 0.0;
    std::size_t n = 0;

    double get(Measure m) const;
    std::array<double, 6> values() const;
};

/// One measure on a (ground truth, recovered) pair of row-stochastic vectors.
/// KL floors the second argument at 1e-12 and treats 0*ln(0/x) as 0; Clark
/// and Canberra skip components where both entries are 0.
double metric_pair(std::span<const double> d, std::span<const double> d_hat, Measure which,
                   const MetricOptions& options = {});

/// Per-sample metric_pair on matching rows, averaged. Both matrices must be
/// row-stochastic within 1e-6.
MetricReport evaluate(const Matrix& recovered, const Matrix& ground_truth,
                      const MetricOptions& options = {});

/// Ranks per dataset (1 = best, ties get the mean of the tied positions) and
/// their average over datasets, for each of the six measures.
struct RankTable {
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    // Indexed [measure][dataset][method].
    std::vector<std::vector<std::vector<double>>> values;
    std::vector<std::vector<std::vector<double>>> ranks;
    // Indexed [measure][method].
    std::vector<std::vector<double>> average_rank;
};

/// Ranks one row of method values; lower_better selects the direction.
std::vector<double> rank_values(std::span<const double> values, bool lower_better);

/// Builds the full rank table from values[measure][dataset][method].
RankTable average_ranks(const std::vector<std::string>& methods,
                        const std::vector<std::string>& datasets,
                        const std::vector<std::vector<std::vector<double>>>& values);

}  // namespace conle

#endif

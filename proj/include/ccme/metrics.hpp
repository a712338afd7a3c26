#pragma once

#include "ccme/extraction.hpp"
#include "ccme/graph.hpp"
#include "ccme/null_model.hpp"
#include "ccme/wsbm.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ccme {

enum class OnmiVariant {
    Max, ///< mutual information over the larger total entropy
    Lfk, ///< 1 - average of the two normalised conditional entropies
};

/// Overlapping NMI of two covers over the same node set. Empty communities
/// are ignored; either cover empty gives 0.
double onmi(const Cover& a, const Cover& b, OnmiVariant variant = OnmiVariant::Max);

struct OnmiResult {
    double value = 0.0;
    bool empty_restriction = false; ///< nothing left to compare; value is 0
    std::size_t nodes = 0;          ///< size of the restricted node set
};

/// oNMI on the nodes `result` placed into communities. Truth communities are
/// intersected with that node set; truth-background nodes in it stay and
/// belong to no truth community.
OnmiResult onmi_restricted(const Cover& result, const GroundTruth& truth,
                           OnmiVariant variant = OnmiVariant::Max);

/// (1/(1-x+a) - 1/(1+a)) / (1/a - 1/(1+a)); DomainError unless x in [0,1], a > 0.
double t_onmi(double x, double a = 0.05);

struct BackgroundErrors {
    double pct_cib = 0.0; ///< true community nodes left in background
    double pct_bic = 0.0; ///< true background nodes placed in communities
};
BackgroundErrors background_metrics(const Cover& result, const GroundTruth& truth);

/// Weighted modularity of a partition (one block id per node), self pairs
/// included with zero weight. DomainError when s_T = 0 or sizes mismatch.
double weighted_modularity(std::span<const std::size_t> partition, const WeightedNetwork& net);

/// A(u, C_u) = sum over v in u's block (v = u included) of W_uv - s_u s_v / s_T.
/// weighted_modularity equals the sum of these divided by s_T.
std::vector<double> modularity_contributions(std::span<const std::size_t> partition,
                                             const WeightedNetwork& net);

/// Mean z-score of S(b, C) over true background nodes b, one entry per true
/// community C, under `params`.
std::vector<double> background_block_z(const WeightedNetwork& net, const NullParams& params,
                                       const GroundTruth& truth);

struct EvalReport {
    double onmi = 0.0;
    double t_onmi = 0.0;
    double pct_cib = 0.0;
    double pct_bic = 0.0;
    std::size_t n_communities = 0;
    /// min, 25%, median, 75%, max of detected community sizes (0 if none)
    std::array<double, 5> size_quantiles{};
    bool empty_restriction = false;

    static std::string csv_header();
    std::string csv_row() const;
    std::string json() const;
};

EvalReport evaluate(const Cover& result, const GroundTruth& truth,
                    OnmiVariant variant = OnmiVariant::Max, double a = 0.05);

} // namespace ccme

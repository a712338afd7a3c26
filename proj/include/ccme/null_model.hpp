#pragma once

#include "ccme/graph.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace ccme {

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters of the continuous configuration model: expected degrees,
/// expected strengths and the relative edge-weight variance kappa.
struct NullParams {
    std::vector<double> degree;
    std::vector<double> strength;
    double kappa = 1.0;

    std::size_t size() const noexcept { return degree.size(); }
    /// Throws ValidationError on length mismatch, negative entries or kappa <= 0.
    void validate() const;
};

/// Method-of-moments estimate of kappa from observed degrees and strengths:
/// sum over edges of (W - f)^2 divided by the sum of f^2, f = f_uv(d, s).
double estimate_kappa(const WeightedNetwork& net);

/// Observed degrees, strengths and the estimated kappa.
NullParams estimate_params(const WeightedNetwork& net);

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

/// Null mean and standard deviation of S(u, B) = sum of weights between u and
/// B \ {u}. Direct pairwise sum; O(|B|).
Moments null_moments(NodeId u, std::span<const NodeId> set, const NullParams& params);

/// Upper-tail Normal p-value 1 - Phi((s - mean) / sd). With sd == 0 the
/// result is 1 when s <= mean and 0 otherwise.
double upper_tail_p_value(double statistic, Moments m);

/// Observed S(u, B \ {u}).
double node_set_statistic(NodeId u, std::span<const NodeId> set, const WeightedNetwork& net);

double node_set_p_value(NodeId u, std::span<const NodeId> set, const WeightedNetwork& net,
                        const NullParams& params);

/// Batched moments of S(u, B) for every node u against one set B.
///
/// Sums over B are reduced to a handful of aggregates so that preparing a
/// set costs O(|B| log |B|) and each node query O(log |B|). Pairs whose
/// Chung-Lu probability exceeds one are located by a degree-sorted prefix.
class MomentEngine {
public:
    explicit MomentEngine(const NullParams& params);

    /// Sets the current comparison set. Duplicates in `set` are not allowed.
    void prepare(std::span<const NodeId> set);
    /// Moments of S(u, B \ {u}) for the prepared set.
    Moments moments(NodeId u) const;

    const NullParams& params() const noexcept { return *params_; }

private:
    double pair_variance(NodeId u, NodeId v) const;

    const NullParams* params_;
    double degree_total_;
    double strength_total_;
    std::vector<double> a_; ///< s(u)^2 / d(u), zero when d(u) == 0
    std::vector<char> in_set_;
    std::vector<NodeId> current_;
    // Set members with d > 0, sorted by degree, and prefix sums over them.
    std::vector<double> sorted_degree_;
    std::vector<double> prefix_a_;
    std::vector<double> prefix_s2_;
    double set_strength_ = 0.0;
};

/// Observed S(u, B \ {u}) for every node u at once.
std::vector<double> node_set_statistics(std::span<const NodeId> set, const WeightedNetwork& net);

/// Upper-tail p-values of every node against `set`.
std::vector<double> node_set_p_values(std::span<const NodeId> set, const WeightedNetwork& net,
                                      MomentEngine& engine);

struct SetStatistic {
    double statistic = 0.0; ///< S(B) = sum_v S(v, B \ {v})
    double z = 0.0;
    double p = 1.0;
};

/// Set-wise z statistic. Per-node null variances are summed as if
/// independent; `conservative` multiplies sigma(B) by sqrt(2) to account for
/// each internal edge entering two node sums. Sets with fewer than two
/// members give (0, 0, 1).
SetStatistic set_self_statistic(std::span<const NodeId> set, const WeightedNetwork& net,
                                const NullParams& params, bool conservative = false);
SetStatistic set_self_statistic(std::span<const NodeId> set, const WeightedNetwork& net,
                                MomentEngine& engine, bool conservative = false);

/// Mean-one edge-weight multiplier distribution.
struct WeightDistribution {
    enum class Family { Gamma, Uniform };
    Family family = Family::Gamma;
    double variance = 0.5;

    /// Uniform requires variance < 1/3 so the support stays positive.
    void validate() const;

    template <class Rng>
    double sample(Rng& rng) const {
        if (family == Family::Gamma) {
            std::gamma_distribution<double> g(1.0 / variance, variance);
            return g(rng);
        }
        const double half = std::sqrt(3.0 * variance);
        std::uniform_real_distribution<double> u(1.0 - half, 1.0 + half);
        return u(rng);
    }
};

/// Draws one network from the continuous configuration model. Edges are
/// Bernoulli(min(1, r_uv(d))); present edges carry f_uv(d, s) times a draw
/// from `dist`. Uses geometric skipping over degree-sorted nodes, so the
/// cost is proportional to n plus the number of edges.
WeightedNetwork sample_null_network(const NullParams& params, const WeightDistribution& dist,
                                    std::uint64_t seed);

/// Draws the weight of a single pair (zero when the edge is absent).
template <class Rng>
double sample_pair_weight(const RatioKernel& kernel, NodeId u, NodeId v,
                          const WeightDistribution& dist, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (unif(rng) >= kernel.r_x_truncated(u, v))
        return 0.0;
    return kernel.f(u, v) * dist.sample(rng);
}

struct RegularityReport {
    double lambda = 0.0;                ///< average expected degree
    std::map<double, double> moments;   ///< r -> L_{n,r}
    double beta_fit = 0.0;              ///< slope of log s on log d, minus one
};

RegularityReport regularity_diagnostics(std::span<const double> degree,
                                        std::span<const double> strength,
                                        std::span<const double> orders = {});
RegularityReport regularity_diagnostics(const NullParams& params,
                                        std::span<const double> orders = {});

/// Standardized statistics (S(u, B) - mu) / sigma over independent replicates
/// of the null, each with a fresh uniformly drawn node u and set B of
/// `set_size` other nodes. Only the pairs (u, v in B) are sampled; they are
/// independent of the rest of the network under the model.
std::vector<double> standardized_null_statistics(const NullParams& params,
                                                 const WeightDistribution& dist,
                                                 std::size_t set_size, std::size_t replicates,
                                                 std::uint64_t seed);

/// Kolmogorov distance between the empirical CDF of `sample` and N(0, 1).
double ks_distance_to_normal(std::vector<double> sample);

/// 1 - Phi(z).
double normal_upper_tail(double z);

} // namespace ccme

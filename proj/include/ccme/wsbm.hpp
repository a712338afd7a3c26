#pragma once

#include "ccme/extraction.hpp"
#include "ccme/graph.hpp"
#include "ccme/null_model.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ccme {

/// Dense row-major K x K matrix.
class BlockMatrix {
public:
    BlockMatrix() = default;
    BlockMatrix(std::size_t k, double fill) : k_(k), a_(k * k, fill) {}
    /// Diagonal `on`, off-diagonal `off`.
    static BlockMatrix assortative(std::size_t k, double on, double off);

    std::size_t size() const noexcept { return k_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * k_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * k_ + j]; }
    double max() const;
    bool operator==(const BlockMatrix&) const = default;

private:
    std::size_t k_ = 0;
    std::vector<double> a_;
};

/// Mean of the density proportional to x^exponent on [lo, hi].
double truncated_power_law_mean(double exponent, double lo, double hi);

/// Inverse-CDF draw from the density proportional to x^exponent on [lo, hi].
template <class Rng>
double draw_power_law(double exponent, double lo, double hi, Rng& rng) {
    if (lo == hi)
        return lo;
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double e1 = exponent + 1.0;
    if (std::abs(e1) < 1e-12)
        return lo * std::pow(hi / lo, u);
    const double a = std::pow(lo, e1), b = std::pow(hi, e1);
    return std::pow(a + u * (b - a), 1.0 / e1);
}

/// `count` i.i.d. draws; throws DomainError unless 0 < lo <= hi.
std::vector<double> sample_truncated_power_law(double exponent, double lo, double hi,
                                               std::size_t count, std::uint64_t seed);

/// Lower cutoff lo such that the power law on [lo, hi] has the given mean.
double power_law_lower_bound_for_mean(double exponent, double mean, double hi);

/// Benchmark parameters. Zero-valued optional fields take their defaults in
/// `resolved()`: m_min = n/5, m_max = 3 m_min / 2, k_mean = sqrt(n),
/// k_max = 3 k_mean.
struct BenchmarkConfig {
    std::size_t n = 2000;
    std::size_t n_b = 0;
    double m_min = 0.0;
    double m_max = 0.0;
    double tau1 = -1.0;
    double tau2 = -2.0;
    double k_mean = 0.0;
    double k_max = 0.0;
    double s_e = 3.0;
    double s_w = 3.0;
    std::size_t o_n = 0;
    std::size_t o_m = 1;
    double sigma2 = 0.5;
    double beta = 0.5;
    /// Fixed number of communities; 0 draws sizes until memberships are covered.
    std::size_t num_communities = 0;
    WeightDistribution::Family weight_family = WeightDistribution::Family::Gamma;

    BenchmarkConfig resolved() const;
    /// Throws ValidationError naming the offending field.
    void validate() const;
    std::size_t memberships() const noexcept { return n + o_n * (o_m > 0 ? o_m - 1 : 0); }
    WeightDistribution distribution() const { return {weight_family, sigma2}; }
};

struct Membership {
    std::vector<NodeSet> communities;
    std::vector<std::vector<std::uint32_t>> of_node; ///< sorted block ids per node
};

/// Community sizes from the truncated power law, shrunk proportionally to
/// sum to n + o_n (o_m - 1), then a uniform random pairing of node
/// memberships with community slots (no node twice in one community).
Membership build_membership_cover(const BenchmarkConfig& cfg, std::uint64_t seed);

struct WsbmConfig {
    std::size_t K = 0;
    std::vector<std::vector<std::uint32_t>> membership;
    BlockMatrix P;
    BlockMatrix M;
    std::vector<double> phi; ///< sums to n
    std::vector<double> psi; ///< sums to n
    double rho = 1.0;
    WeightDistribution dist;

    std::size_t num_nodes() const noexcept { return membership.size(); }
    /// Edge baseline for a node pair: shared blocks use the largest shared
    /// diagonal entry, otherwise the mean over membership pairs.
    double edge_block(NodeId u, NodeId v) const { return block_entry(P, u, v); }
    double weight_block(NodeId u, NodeId v) const { return block_entry(M, u, v); }
    double edge_probability(NodeId u, NodeId v) const;

    /// Checks sizes, normalisation and proper probabilities; the error names
    /// the offending pair.
    void validate() const;

private:
    double block_entry(const BlockMatrix& m, NodeId u, NodeId v) const;
};

struct Propensities {
    std::vector<double> phi; ///< raw degree propensities
    std::vector<double> psi; ///< phi^(beta + 1)
};

/// Raw propensities for `count` nodes: phi from the power law with exponent
/// tau1, mean k_mean and maximum k_max; psi = phi^(beta + 1).
Propensities draw_propensities(const BenchmarkConfig& cfg, std::size_t count, std::uint64_t seed);

/// Builds the WSBM for given raw propensities: phi and psi are normalised to
/// sum to n, P is scaled so the expected total degree equals sum(raw phi)
/// and M so the expected total strength equals sum(raw psi); rho = 1.
WsbmConfig build_wsbm_config(const BenchmarkConfig& cfg, const Membership& membership,
                             std::span<const double> raw_phi, std::span<const double> raw_psi);

/// Expected total degree and strength of a WSBM, by grouping nodes with
/// identical membership.
struct ExpectedTotals {
    double degree = 0.0;
    double strength = 0.0;
};
ExpectedTotals expected_totals(const WsbmConfig& cfg);

struct GroundTruth {
    Cover cover;        ///< true communities over all nodes
    NodeSet background; ///< true background nodes
};

struct WsbmSample {
    WeightedNetwork net;
    GroundTruth truth;
};

/// Edges Bernoulli(rho r_uv(phi) P_eff); present edges weigh
/// f_uv(phi, psi) M_eff xi.
WsbmSample generate_wsbm(const WsbmConfig& cfg, std::uint64_t seed);

struct BackgroundFit {
    std::vector<double> phi_prime;
    std::vector<double> psi_prime;
    double phi_prime_total = 0.0;
    double psi_prime_total = 0.0;
    double phi_residual = 0.0; ///< |phi'_T - (d_CT + phi_BT phi_CT / phi'_T + phi_BT)|
    double psi_residual = 0.0;
};

/// Adjusted propensities for appending background nodes to an already
/// generated community network. `phi`, `psi` hold the target propensities
/// of all n + n_b nodes, community nodes first.
BackgroundFit fit_background_propensities(const WeightedNetwork& community_net,
                                          std::span<const double> phi,
                                          std::span<const double> psi);

/// Positive root of x^2 - (b + d) x - c b = 0, i.e. x = d + b c / x + b.
double adjusted_total(double observed_total, double community_target, double background_target);

struct BackgroundSample {
    WeightedNetwork net;
    GroundTruth truth;
    BackgroundFit fit;
};

/// Appends n_b = phi.size() - n background nodes; every pair touching a
/// background node follows the continuous configuration model with
/// parameters (phi', psi', dist).
BackgroundSample append_background(const WeightedNetwork& community_net, const GroundTruth& truth,
                                   std::span<const double> phi, std::span<const double> psi,
                                   const WeightDistribution& dist, std::uint64_t seed);

struct Benchmark {
    WeightedNetwork net;
    GroundTruth truth;
    WsbmConfig wsbm;
    Propensities targets;
    BackgroundFit background; ///< empty when n_b == 0
};

/// Complete benchmark: memberships, propensities, community network and,
/// when n_b > 0, the appended background.
Benchmark generate_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed);

struct ConsistencyCheck {
    bool satisfied = false;
    BlockMatrix matrix;
};

/// H = P o M; matrix = H - H pi pi^t H / (pi^t H pi). Satisfied iff the
/// diagonal is positive and every off-diagonal entry negative.
ConsistencyCheck consistency_condition(const BlockMatrix& P, const BlockMatrix& M,
                                       std::span<const double> pi_tilde);

} // namespace ccme

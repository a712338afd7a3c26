#pragma once

#include "ccme/graph.hpp"
#include "ccme/null_model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ccme {

/// Sorted, duplicate-free list of node ids.
using NodeSet = std::vector<NodeId>;

/// Sorts and deduplicates in place; returns the argument for chaining.
NodeSet& canonicalize(NodeSet& set);
NodeSet canonical(std::span<const NodeId> nodes);

struct NodeSetHash {
    std::size_t operator()(const NodeSet& set) const noexcept;
};

/// Collection of possibly overlapping communities over `num_nodes` nodes.
/// Nodes in no community form the background.
struct Cover {
    std::size_t num_nodes = 0;
    std::vector<NodeSet> communities;

    NodeSet background() const;
    /// Per-node membership flag (in at least one community).
    std::vector<char> assigned() const;
};

struct BhResult {
    std::vector<std::size_t> rejected; ///< ascending indices
    double threshold = 0.0;            ///< 0 when nothing is rejected
};

/// Benjamini-Hochberg step-up selection at FDR level alpha. The threshold is
/// the largest p-value whose adjusted value n p / rank is at most alpha, with
/// tied p-values sharing their largest rank.
BhResult bh_select(std::span<const double> pvalues, double alpha);

struct ExtractionConfig {
    double alpha = 0.05;
    double tau_overlap = 0.9;
    std::size_t max_iter = 100;
    bool filter_seeds = true;
    bool smart_skip = true;
    /// Multiply the set-statistic sd by sqrt(2) when filtering and pruning.
    bool conservative_set_sd = false;
    /// Drop communities that fail the post-hoc fixed-point audit.
    bool strict_fixed_points = false;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One application of the multiple-testing set update U_alpha.
class SetUpdater {
public:
    SetUpdater(const WeightedNetwork& net, const NullParams& params, double alpha);

    NodeSet operator()(const NodeSet& set);

    const WeightedNetwork& network() const noexcept { return *net_; }
    const NullParams& params() const noexcept { return *params_; }
    MomentEngine& engine() noexcept { return engine_; }

private:
    const WeightedNetwork* net_;
    const NullParams* params_;
    double alpha_;
    MomentEngine engine_;
};

NodeSet update_set(const NodeSet& set, const WeightedNetwork& net, const NullParams& params,
                   double alpha);

struct ScsOutcome {
    enum class Kind { Stable, None };
    Kind kind = Kind::None;
    NodeSet community;          ///< empty unless kind == Stable
    std::size_t updates = 0;    ///< number of U_alpha applications
    std::size_t visited = 0;    ///< distinct sets seen, including the empty start
    bool from_cycle_union = false;
    bool hit_iteration_cap = false;

    bool stable() const noexcept { return kind == Kind::Stable; }
};

/// Stable community search: iterate the update until a set repeats.
///
/// A repeat of the immediately preceding set is a fixed point. A longer
/// cycle C_1..C_J ends the search without a community when any two
/// consecutive members (cyclically) are disjoint; otherwise the union C* is
/// extracted if it was already visited, and the search restarts from C*
/// if not. Reaching the empty set ends the search.
ScsOutcome scs_search(const NodeSet& start, SetUpdater& update, std::size_t max_iter);
ScsOutcome scs_search(const NodeSet& start, const WeightedNetwork& net, const NullParams& params,
                      const ExtractionConfig& config);

/// Initial sets, one per node: d(u) draws with replacement from u's
/// neighbours with probability proportional to the truncated edge z-score
/// max((W - f) / (sqrt(kappa) f), 0), f = f_uv(d, s). Nodes whose scores are
/// all zero fall back to uniform neighbour draws; isolated nodes get an
/// empty set.
std::vector<NodeSet> seed_sets(const WeightedNetwork& net, const NullParams& params,
                               std::uint64_t seed);

/// Indices of seeds whose set statistic survives BH at level alpha.
std::vector<std::size_t> filter_seed_sets(std::span<const NodeSet> seeds,
                                          const WeightedNetwork& net, const NullParams& params,
                                          double alpha, bool conservative = false);

/// Removes exact duplicates, then repeatedly drops the lower-z member of the
/// pair with the largest proportional overlap |C_i & C_j| / |C_i| while that
/// overlap is at least tau.
Cover prune_cover(const Cover& cover, const NullParams& params, const WeightedNetwork& net,
                  double tau_overlap, bool conservative = false);

struct CommunityInfo {
    double z = 0.0;
    double p = 1.0;
    std::size_t size = 0;
    NodeId origin = 0;           ///< node whose seed produced the community
    bool from_cycle_union = false;
    bool fixed_point = true;     ///< U_alpha(C) == C on re-check
};

struct CcmeStats {
    std::size_t seeds = 0;
    std::size_t seeds_after_filter = 0;
    std::size_t searches = 0;
    std::size_t skipped = 0;
    std::size_t stable = 0;
    std::size_t pruned = 0;
};

struct CcmeResult {
    Cover cover;
    std::vector<CommunityInfo> info; ///< parallel to cover.communities
    NullParams params;
    CcmeStats stats;
};

/// Full extraction pipeline. Deterministic for a given config.seed.
CcmeResult run_ccme(const WeightedNetwork& net, const ExtractionConfig& config);

} // namespace ccme

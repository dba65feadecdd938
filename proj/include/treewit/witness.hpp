#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "treewit/hull.hpp"
#include "treewit/mdp.hpp"
#include "treewit/partition.hpp"
#include "treewit/stateset.hpp"

namespace treewit {

/// A set of states downstream of a block interface together with its vector
/// of exact reachability values at the interface states (zero entries for
/// interface states the set excludes).
struct PartialSubsystem {
    int block = -1;
    StateSet states;
    IPoint value;
    int size = 0;
};

enum class DominationKind { Standard, Strong };

struct SearchConfig {
    Mode mode = Mode::Max;
    DominationKind domination = DominationKind::Standard;
    Rational lambda;
    std::optional<int> size_upper_bound;
    bool enable_value_sum_prune = false;
    bool enable_size_bound_prune = false;
    int interface_cap = 10;
    int parallelism = 1;
    /// Testing switch: enumerate all block subsets instead of the models of
    /// phi(B). Must never change the result.
    bool use_phi_filter = true;

    /// min mode pairs with strong domination, max with standard.
    static SearchConfig for_mode(Mode mode, Rational lambda);
    void check() const;  // throws on an inconsistent mode/domination pair
};

struct SearchStats {
    std::uint64_t blocks_processed = 0;
    std::uint64_t candidates_generated = 0;
    std::uint64_t candidates_kept = 0;
    std::uint64_t candidates_pruned = 0;
    std::uint64_t hull_lp_calls = 0;
};

struct WitnessResult {
    StateSet states;
    int size = 0;
    Rational value;
};

/// Per-block facts consumed by the pruning heuristics.
struct BlockPruneContext {
    bool goal_in_closure = false;
    /// States on a shortest underlying-graph path from an initial state
    /// strictly before it enters the block's closure; 0 when an initial
    /// state already lies inside.
    int entry_distance = 0;
};

/// I-point of T at block b: exact values of the subsystem induced by T at
/// the interface states inc(b), zero for excluded interface states.
IPoint i_point(const Mdp& m, const DirectedTreePartition& p, int block, const StateSet& T,
               Mode mode);

/// Subsets S_B of block b with: every included non-interface state has an
/// included in-block predecessor, every included non-exit non-goal state an
/// included in-block successor. Ascending (size, lexicographic) order.
std::vector<StateSet> enumerate_phi_subsets(const Mdp& m, const DirectedTreePartition& p,
                                            int block);

/// Cartesian product of the children's stored partial subsystems: the state
/// union paired with the concatenated interface vector over out(b).
std::vector<std::pair<StateSet, IPoint>> successor_points(
    const std::map<int, std::vector<PartialSubsystem>>& psubsys,
    const Mdp& m, const DirectedTreePartition& p, int block);

/// Value vector at inc(b) of the candidate S_B under the interface
/// assumption f on out(b); equals assumed_values over S_B united with
/// dom(f), with zeros at excluded interface states.
IPoint evaluate_candidate(const Mdp& m, const DirectedTreePartition& p, int block,
                          const StateSet& sb, const ValueAssumption& f, Mode mode);

/// Algorithm "removeDominated": keeps, per ascending size class, exactly the
/// candidates whose points are hull vertices (standard) or pointwise-maximal
/// (strong). Output is ascending (size, lexicographic state set); exact
/// duplicate points keep the lexicographically smallest set of minimal size.
std::vector<PartialSubsystem> remove_dominated(std::vector<PartialSubsystem> cands,
                                               DominationKind kind, int interface_cap = 10);

bool prune_candidate(const PartialSubsystem& cand, const SearchConfig& cfg,
                     const BlockPruneContext& ctx);

/// Bottom-up minimal-witness search over the tree partition. Returns the
/// smallest state set whose induced subsystem reaches the goal with
/// mode-probability >= lambda from the initial distribution, or nullopt.
/// The result is re-verified with an independent exact solve.
std::optional<WitnessResult> minimal_witness(const Mdp& m, const DirectedTreePartition& p,
                                             const SearchConfig& cfg,
                                             SearchStats* stats = nullptr);

/// Independent oracle: enumerates subsets ascending by (size, lex) and
/// returns the first whose induced subsystem meets lambda. Refuses models
/// over `cap` states.
std::optional<WitnessResult> brute_force_minimal_witness(const Mdp& m, const SearchConfig& cfg,
                                                         int cap = 20);

}  // namespace treewit

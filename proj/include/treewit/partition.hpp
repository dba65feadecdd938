#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treewit/mdp.hpp"
#include "treewit/stateset.hpp"

namespace treewit {

/// Plain directed graph with sorted, deduplicated successor lists.
struct Digraph {
    int n = 0;
    std::vector<std::vector<int>> adj;

    Digraph() = default;
    explicit Digraph(int vertices) : n(vertices), adj(vertices) {}
    void add_edge(int u, int v);
    bool has_edge(int u, int v) const;
};

Digraph underlying_graph(const Mdp& m);

using Blocks = std::vector<std::vector<int>>;

/// Quotient of g under the given partition; self-loops of the quotient
/// (edges inside one block) are dropped. Throws if the blocks do not
/// partition the vertex set.
Digraph quotient(const Digraph& g, const Blocks& blocks);

/// Partition of the state space whose quotient is a directed tree (every
/// node in-degree at most one, underlying undirected multigraph a tree).
/// parent/children/topo_order are only populated when tree_shape holds.
struct DirectedTreePartition {
    Blocks blocks;  // each sorted ascending, canonical order

    bool tree_shape = false;
    std::vector<int> parent;                 // per block, -1 at the root
    std::vector<std::vector<int>> children;  // per block, ascending
    std::vector<int> topo_order;             // parents before children
    std::vector<int> block_of;               // per state, -1 if uncovered

    int width() const;
    bool is_path() const;
    int root() const;

    /// Derives the quotient structure; never throws on shape problems, the
    /// tree_shape flag and validate_partition report them instead.
    static DirectedTreePartition build(const Digraph& g, Blocks blocks);
};

/// Empty iff blocks partition the states, the quotient is a tree, every
/// block is goal-pure and all initial states live in the root block.
std::vector<std::string> validate_partition(const Mdp& m, const DirectedTreePartition& p);

struct BlockInterfaces {
    std::vector<int> inc;   // entered from the parent block, or initial
    std::vector<int> out;   // union of the children's inc sets
    std::vector<int> exit;  // block states with a successor outside the block
    StateSet closure;       // union of the blocks in this subtree
};

BlockInterfaces block_interfaces(const Mdp& m, const DirectedTreePartition& p, int block);

/// SCC-chain heuristic: condense strongly connected components, merge away
/// quotient in-degree >= 2 via convex closures, then pull all initial states
/// into the root block. Throws if the underlying graph is weakly
/// disconnected or no goal-pure tree partition exists.
DirectedTreePartition heuristic_partition(const Mdp& m);

enum class PartitionKind { Tree, Path };

struct MinWidthResult {
    int width = 0;
    std::uint64_t partitions_examined = 0;
};

/// Exact dtpw/dppw by enumerating every set partition of the vertices.
/// Refuses graphs larger than `limit` vertices.
MinWidthResult brute_force_min_width(const Digraph& g, PartitionKind kind, int limit = 10);

}  // namespace treewit

#include "treewit/partition.hpp"

#include <algorithm>
#include <climits>
#include <deque>
#include <numeric>
#include <set>

#include "treewit/error.hpp"

namespace treewit {

void Digraph::add_edge(int u, int v) {
    if (u < 0 || u >= n || v < 0 || v >= n) throw Error("edge endpoint out of range");
    auto& row = adj[u];
    auto it = std::lower_bound(row.begin(), row.end(), v);
    if (it == row.end() || *it != v) row.insert(it, v);
}

bool Digraph::has_edge(int u, int v) const {
    const auto& row = adj[u];
    return std::binary_search(row.begin(), row.end(), v);
}

Digraph underlying_graph(const Mdp& m) {
    Digraph g(m.num_states);
    auto succ = m.underlying_successors();
    for (int s = 0; s < m.num_states; ++s)
        for (int t : succ[s]) g.add_edge(s, t);
    return g;
}

namespace {

std::vector<int> block_index_of(int n, const Blocks& blocks, bool* exact_partition) {
    std::vector<int> of(n, -1);
    bool ok = true;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].empty()) ok = false;
        for (int s : blocks[b]) {
            if (s < 0 || s >= n) {
                ok = false;
                continue;
            }
            if (of[s] != -1)
                ok = false;
            else
                of[s] = static_cast<int>(b);
        }
    }
    for (int s = 0; s < n; ++s)
        if (of[s] == -1) ok = false;
    if (exact_partition) *exact_partition = ok;
    return of;
}

}  // namespace

Digraph quotient(const Digraph& g, const Blocks& blocks) {
    bool exact = false;
    auto of = block_index_of(g.n, blocks, &exact);
    if (!exact) throw Error("quotient: blocks do not partition the vertex set");
    Digraph q(static_cast<int>(blocks.size()));
    for (int u = 0; u < g.n; ++u)
        for (int v : g.adj[u])
            if (of[u] != of[v]) q.add_edge(of[u], of[v]);
    return q;
}

int DirectedTreePartition::width() const {
    std::size_t w = 0;
    for (const auto& b : blocks) w = std::max(w, b.size());
    return static_cast<int>(w);
}

bool DirectedTreePartition::is_path() const {
    if (!tree_shape) return false;
    for (const auto& c : children)
        if (c.size() > 1) return false;
    return true;
}

int DirectedTreePartition::root() const {
    return tree_shape && !topo_order.empty() ? topo_order.front() : -1;
}

DirectedTreePartition DirectedTreePartition::build(const Digraph& g, Blocks blocks) {
    DirectedTreePartition p;
    for (auto& b : blocks) std::sort(b.begin(), b.end());
    p.blocks = std::move(blocks);
    bool exact = false;
    p.block_of = block_index_of(g.n, p.blocks, &exact);
    if (!exact) return p;

    const int k = static_cast<int>(p.blocks.size());
    std::vector<std::set<int>> out(k);
    for (int u = 0; u < g.n; ++u)
        for (int v : g.adj[u])
            if (p.block_of[u] != p.block_of[v]) out[p.block_of[u]].insert(p.block_of[v]);

    std::vector<int> indeg(k, 0);
    int directed_edges = 0;
    std::set<std::pair<int, int>> undirected;
    bool antiparallel = false;
    for (int b = 0; b < k; ++b) {
        for (int c : out[b]) {
            ++indeg[c];
            ++directed_edges;
            if (out[c].count(b)) antiparallel = true;
            undirected.insert({std::min(b, c), std::max(b, c)});
        }
    }
    bool indeg_ok = std::all_of(indeg.begin(), indeg.end(), [](int d) { return d <= 1; });
    if (antiparallel || !indeg_ok ||
        static_cast<int>(undirected.size()) != k - 1 ||
        directed_edges != static_cast<int>(undirected.size()))
        return p;

    // Connectivity: k-1 undirected edges and connected <=> tree.
    std::vector<int> uf(k);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int x) {
        while (uf[x] != x) x = uf[x] = uf[uf[x]];
        return x;
    };
    for (auto [a, b] : undirected) uf[find(a)] = find(b);
    for (int b = 0; b < k; ++b)
        if (find(b) != find(0)) return p;

    p.tree_shape = true;
    p.parent.assign(k, -1);
    p.children.assign(k, {});
    for (int b = 0; b < k; ++b) {
        for (int c : out[b]) {
            p.parent[c] = b;
            p.children[b].push_back(c);
        }
    }
    int root = -1;
    for (int b = 0; b < k; ++b)
        if (p.parent[b] == -1) root = b;
    std::deque<int> queue{root};
    while (!queue.empty()) {
        int b = queue.front();
        queue.pop_front();
        p.topo_order.push_back(b);
        for (int c : p.children[b]) queue.push_back(c);
    }
    return p;
}

std::vector<std::string> validate_partition(const Mdp& m, const DirectedTreePartition& p) {
    std::vector<std::string> out;
    std::vector<int> covered(m.num_states, 0);
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        if (p.blocks[b].empty()) out.push_back("block " + std::to_string(b) + " is empty");
        for (int s : p.blocks[b]) {
            if (s < 0 || s >= m.num_states) {
                out.push_back("block " + std::to_string(b) + " contains unknown state " +
                              std::to_string(s));
                continue;
            }
            if (++covered[s] > 1)
                out.push_back("state " + std::to_string(s) + " appears in several blocks");
        }
    }
    for (int s = 0; s < m.num_states; ++s)
        if (covered[s] == 0) out.push_back("state " + std::to_string(s) + " is not covered");
    if (!out.empty()) return out;

    if (!p.tree_shape) {
        out.push_back("quotient of the partition is not a directed tree");
        return out;
    }
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        bool has_goal = false, has_other = false;
        for (int s : p.blocks[b]) (m.goal.contains(s) ? has_goal : has_other) = true;
        if (has_goal && has_other)
            out.push_back("block " + std::to_string(b) + " mixes goal and non-goal states");
    }
    int root = p.root();
    for (int s = 0; s < m.num_states; ++s) {
        if (m.initial[s] != 0 && p.block_of[s] != root)
            out.push_back("initial state " + std::to_string(s) + " lies outside the root block");
    }
    return out;
}

BlockInterfaces block_interfaces(const Mdp& m, const DirectedTreePartition& p, int block) {
    if (!p.tree_shape) throw Error("block_interfaces: partition is not a directed tree");
    if (block < 0 || block >= static_cast<int>(p.blocks.size()))
        throw Error("block_interfaces: bad block index");

    BlockInterfaces bi;
    auto succ = m.underlying_successors();

    auto inc_of = [&](int b) {
        std::set<int> inc;
        for (int s : p.blocks[b])
            if (m.initial[s] != 0) inc.insert(s);
        int par = p.parent[b];
        if (par >= 0) {
            for (int u : p.blocks[par])
                for (int v : succ[u])
                    if (p.block_of[v] == b) inc.insert(v);
        }
        return std::vector<int>(inc.begin(), inc.end());
    };

    bi.inc = inc_of(block);
    std::set<int> outs;
    for (int c : p.children[block]) {
        auto ci = inc_of(c);
        outs.insert(ci.begin(), ci.end());
    }
    bi.out.assign(outs.begin(), outs.end());
    for (int s : p.blocks[block]) {
        for (int v : succ[s]) {
            if (p.block_of[v] != block) {
                bi.exit.push_back(s);
                break;
            }
        }
    }
    bi.closure = StateSet(m.num_states);
    std::deque<int> queue{block};
    while (!queue.empty()) {
        int b = queue.front();
        queue.pop_front();
        for (int s : p.blocks[b]) bi.closure.insert(s);
        for (int c : p.children[b]) queue.push_back(c);
    }
    return bi;
}

namespace {

std::vector<std::vector<int>> tarjan_sccs(const Digraph& g) {
    // Iterative Tarjan; components come out in reverse topological order.
    std::vector<int> index(g.n, -1), low(g.n, 0), on_stack(g.n, 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> sccs;
    int next = 0;
    struct Frame {
        int v;
        std::size_t child;
    };
    for (int s = 0; s < g.n; ++s) {
        if (index[s] != -1) continue;
        std::vector<Frame> call{{s, 0}};
        index[s] = low[s] = next++;
        stack.push_back(s);
        on_stack[s] = 1;
        while (!call.empty()) {
            auto& fr = call.back();
            if (fr.child < g.adj[fr.v].size()) {
                int w = g.adj[fr.v][fr.child++];
                if (index[w] == -1) {
                    index[w] = low[w] = next++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[fr.v] = std::min(low[fr.v], index[w]);
                }
            } else {
                if (low[fr.v] == index[fr.v]) {
                    std::vector<int> comp;
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp.push_back(w);
                        if (w == fr.v) break;
                    }
                    std::sort(comp.begin(), comp.end());
                    sccs.push_back(std::move(comp));
                }
                int v = fr.v;
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }
    return sccs;
}

bool weakly_connected(const Digraph& g) {
    if (g.n <= 1) return true;
    std::vector<std::vector<int>> und(g.n);
    for (int u = 0; u < g.n; ++u)
        for (int v : g.adj[u]) {
            und[u].push_back(v);
            und[v].push_back(u);
        }
    std::vector<char> seen(g.n, 0);
    std::deque<int> queue{0};
    seen[0] = 1;
    int count = 1;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (int v : und[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                queue.push_back(v);
            }
        }
    }
    return count == g.n;
}

void sort_blocks_by_min(Blocks& blocks) {
    for (auto& b : blocks) std::sort(b.begin(), b.end());
    std::sort(blocks.begin(), blocks.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) { return a.front() < b.front(); });
}

/// Quotient adjacency between current blocks, plus in-degrees.
struct QuotientView {
    std::vector<std::set<int>> out;
    std::vector<int> indeg;
};

QuotientView quotient_view(const Digraph& g, const Blocks& blocks) {
    std::vector<int> of(g.n, -1);
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (int s : blocks[b]) of[s] = static_cast<int>(b);
    QuotientView qv;
    qv.out.assign(blocks.size(), {});
    qv.indeg.assign(blocks.size(), 0);
    for (int u = 0; u < g.n; ++u)
        for (int v : g.adj[u])
            if (of[u] != of[v]) qv.out[of[u]].insert(of[v]);
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (int c : qv.out[b]) ++qv.indeg[c];
    return qv;
}

std::vector<char> forward_closure(const QuotientView& qv, int from) {
    std::vector<char> seen(qv.out.size(), 0);
    std::deque<int> queue{from};
    seen[from] = 1;
    while (!queue.empty()) {
        int b = queue.front();
        queue.pop_front();
        for (int c : qv.out[b])
            if (!seen[c]) {
                seen[c] = 1;
                queue.push_back(c);
            }
    }
    return seen;
}

Blocks merge_blocks(const Blocks& blocks, const std::set<int>& merge) {
    Blocks out;
    std::vector<int> merged;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (merge.count(static_cast<int>(b)))
            merged.insert(merged.end(), blocks[b].begin(), blocks[b].end());
        else
            out.push_back(blocks[b]);
    }
    out.push_back(std::move(merged));
    sort_blocks_by_min(out);
    return out;
}

}  // namespace

DirectedTreePartition heuristic_partition(const Mdp& m) {
    Digraph g = underlying_graph(m);
    if (m.num_states == 0) throw Error("heuristic_partition: empty model");
    if (!weakly_connected(g))
        throw Error("heuristic_partition: underlying graph is weakly disconnected, "
                    "no tree quotient exists");
    bool init_goal = false, init_other = false;
    for (int s = 0; s < m.num_states; ++s)
        if (m.initial[s] != 0) (m.goal.contains(s) ? init_goal : init_other) = true;
    if (init_goal && init_other)
        throw Error("heuristic_partition: initial states mix goal and non-goal, no "
                    "goal-pure partition has all of them in the root block");

    Blocks blocks = tarjan_sccs(g);
    sort_blocks_by_min(blocks);

    // Merge parents of any block with quotient in-degree >= 2, together with
    // all blocks on directed paths between those parents (convex closure).
    while (true) {
        QuotientView qv = quotient_view(g, blocks);
        int victim = -1;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (qv.indeg[b] >= 2) {
                victim = static_cast<int>(b);
                break;
            }
        }
        if (victim < 0) break;
        std::set<int> parents;
        for (std::size_t b = 0; b < blocks.size(); ++b)
            if (qv.out[b].count(victim)) parents.insert(static_cast<int>(b));
        std::set<int> merge = parents;
        std::vector<std::vector<char>> reach;
        reach.reserve(parents.size());
        std::vector<int> plist(parents.begin(), parents.end());
        for (int p : plist) reach.push_back(forward_closure(qv, p));
        for (std::size_t i = 0; i < plist.size(); ++i) {
            for (std::size_t j = 0; j < plist.size(); ++j) {
                if (i == j) continue;
                // Blocks z with plist[i] ->* z ->* plist[j].
                for (std::size_t z = 0; z < blocks.size(); ++z) {
                    if (!reach[i][z]) continue;
                    auto rz = forward_closure(qv, static_cast<int>(z));
                    if (rz[plist[j]]) merge.insert(static_cast<int>(z));
                }
            }
        }
        blocks = merge_blocks(blocks, merge);
    }

    // Pull every block holding an initial state, and all blocks on its
    // root path, into the root block.
    {
        QuotientView qv = quotient_view(g, blocks);
        std::vector<int> parent(blocks.size(), -1);
        for (std::size_t b = 0; b < blocks.size(); ++b)
            for (int c : qv.out[b]) parent[c] = static_cast<int>(b);
        std::vector<int> of(m.num_states, -1);
        for (std::size_t b = 0; b < blocks.size(); ++b)
            for (int s : blocks[b]) of[s] = static_cast<int>(b);
        int root = -1;
        for (std::size_t b = 0; b < blocks.size(); ++b)
            if (parent[b] == -1) root = static_cast<int>(b);
        std::set<int> merge;
        for (int s = 0; s < m.num_states; ++s) {
            if (m.initial[s] == 0) continue;
            int b = of[s];
            while (b != -1) {
                merge.insert(b);
                b = parent[b];
            }
        }
        merge.insert(root);
        if (merge.size() > 1) blocks = merge_blocks(blocks, merge);
    }

    auto p = DirectedTreePartition::build(g, blocks);
    auto errs = validate_partition(m, p);
    if (!errs.empty())
        throw Error("heuristic_partition: no valid goal-pure tree partition found (" +
                    errs.front() + ")");
    return p;
}

namespace {

struct PartitionShape {
    bool tree = false;
    bool path = false;
};

PartitionShape check_shape(const Digraph& g, const std::vector<int>& of, int k) {
    // Adjacency between blocks, self-loops dropped.
    std::vector<std::set<int>> out(k);
    for (int u = 0; u < g.n; ++u)
        for (int v : g.adj[u])
            if (of[u] != of[v]) out[of[u]].insert(of[v]);
    std::vector<int> indeg(k, 0);
    int edges = 0;
    for (int b = 0; b < k; ++b) {
        for (int c : out[b]) {
            if (out[c].count(b)) return {};  // 2-cycle
            ++indeg[c];
            ++edges;
        }
    }
    for (int b = 0; b < k; ++b)
        if (indeg[b] > 1) return {};
    if (edges != k - 1) return {};  // with indeg<=1 and no 2-cycles: forest test
    std::vector<int> uf(k);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int x) {
        while (uf[x] != x) x = uf[x] = uf[uf[x]];
        return x;
    };
    for (int b = 0; b < k; ++b)
        for (int c : out[b]) uf[find(b)] = find(c);
    for (int b = 0; b < k; ++b)
        if (find(b) != find(0)) return {};
    PartitionShape shape;
    shape.tree = true;
    shape.path = true;
    for (int b = 0; b < k; ++b)
        if (out[b].size() > 1) shape.path = false;
    return shape;
}

}  // namespace

MinWidthResult brute_force_min_width(const Digraph& g, PartitionKind kind, int limit) {
    if (g.n > limit)
        throw Error("brute_force_min_width: graph has " + std::to_string(g.n) +
                    " vertices, over the cap of " + std::to_string(limit));
    if (g.n == 0) throw Error("brute_force_min_width: empty graph");

    // Restricted growth strings enumerate every set partition exactly once.
    std::vector<int> assign(g.n, 0);
    MinWidthResult res;
    res.width = INT_MAX;
    while (true) {
        ++res.partitions_examined;
        int k = *std::max_element(assign.begin(), assign.end()) + 1;
        std::vector<int> sizes(k, 0);
        for (int a : assign) ++sizes[a];
        int width = *std::max_element(sizes.begin(), sizes.end());
        if (width < res.width) {
            auto shape = check_shape(g, assign, k);
            bool ok = kind == PartitionKind::Tree ? shape.tree : shape.path;
            if (ok) res.width = width;
        }
        // Next restricted growth string.
        int i = g.n - 1;
        for (; i > 0; --i) {
            int prefix_max = *std::max_element(assign.begin(), assign.begin() + i);
            if (assign[i] <= prefix_max) {
                ++assign[i];
                std::fill(assign.begin() + i + 1, assign.end(), 0);
                break;
            }
        }
        if (i == 0) break;
    }
    if (res.width == INT_MAX)
        throw Error("brute_force_min_width: no directed " +
                    std::string(kind == PartitionKind::Tree ? "tree" : "path") +
                    " partition exists (graph weakly disconnected)");
    return res;
}

}  // namespace treewit

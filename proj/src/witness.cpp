#include "treewit/witness.hpp"

#include <algorithm>
#include <deque>

#include "treewit/error.hpp"
#include "treewit/parallel.hpp"

namespace treewit {

SearchConfig SearchConfig::for_mode(Mode mode, Rational lambda) {
    SearchConfig cfg;
    cfg.mode = mode;
    cfg.domination = mode == Mode::Min ? DominationKind::Strong : DominationKind::Standard;
    cfg.lambda = std::move(lambda);
    return cfg;
}

void SearchConfig::check() const {
    if (mode == Mode::Min && domination != DominationKind::Strong)
        throw Error("config: min mode requires strong domination");
    if (mode == Mode::Max && domination != DominationKind::Standard)
        throw Error("config: max mode requires standard domination");
    if (interface_cap < 0 || parallelism < 0) throw Error("config: negative cap");
}

namespace {

/// Static per-block data for candidate evaluation: block states with their
/// transitions split into in-block moves and moves into out(b).
struct BlockEval {
    bool goal_block = false;
    std::vector<int> b_states;  // sorted
    std::vector<int> inc;       // sorted
    std::vector<int> out;       // sorted
    struct Act {
        std::vector<std::pair<int, Rational>> internal;  // (local index, p)
        std::vector<std::pair<int, Rational>> external;  // (out index, p)
    };
    std::vector<std::vector<Act>> acts;  // per local state
};

BlockEval make_block_eval(const Mdp& m, const DirectedTreePartition& p, int block,
                          const BlockInterfaces& bi) {
    BlockEval be;
    be.b_states = p.blocks[block];
    be.inc = bi.inc;
    be.out = bi.out;
    be.goal_block = !be.b_states.empty() && m.goal.contains(be.b_states.front());
    std::map<int, int> local_of, out_of;
    for (std::size_t i = 0; i < be.b_states.size(); ++i) local_of[be.b_states[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < be.out.size(); ++i) out_of[be.out[i]] = static_cast<int>(i);
    be.acts.resize(be.b_states.size());
    for (std::size_t i = 0; i < be.b_states.size(); ++i) {
        for (const auto& act : m.actions[be.b_states[i]]) {
            BlockEval::Act a;
            for (const auto& tr : act.transitions) {
                auto il = local_of.find(tr.target);
                if (il != local_of.end()) {
                    a.internal.emplace_back(il->second, tr.prob);
                    continue;
                }
                auto io = out_of.find(tr.target);
                if (io == out_of.end())
                    throw Error("internal: block edge escapes out(B) in a tree partition");
                a.external.emplace_back(io->second, tr.prob);
            }
            be.acts[i].push_back(std::move(a));
        }
    }
    return be;
}

/// Exact inc(b)-vector of the candidate S_B under interface values fvals.
IPoint eval_local(const BlockEval& be, const StateSet& sb, const std::vector<Rational>& fvals,
                  Mode mode) {
    IPoint out;
    out.interface = be.inc;
    out.coords.assign(be.inc.size(), Rational(0));
    if (be.goal_block) {
        for (std::size_t i = 0; i < be.inc.size(); ++i)
            if (sb.contains(be.inc[i])) out.coords[i] = 1;
        return out;
    }
    std::vector<int> unknown_of(be.b_states.size(), -1);
    std::vector<int> members;
    for (std::size_t i = 0; i < be.b_states.size(); ++i) {
        if (sb.contains(be.b_states[i])) {
            unknown_of[i] = static_cast<int>(members.size());
            members.push_back(static_cast<int>(i));
        }
    }
    if (members.empty()) return out;
    detail::ReachSystem sys;
    sys.acts.resize(members.size());
    for (std::size_t u = 0; u < members.size(); ++u) {
        for (const auto& act : be.acts[members[u]]) {
            detail::ReachAction ra;
            ra.direct = 0;
            for (const auto& [local, prob] : act.internal)
                if (unknown_of[local] >= 0) ra.moves.emplace_back(unknown_of[local], prob);
            for (const auto& [oi, prob] : act.external) ra.direct += prob * fvals[oi];
            sys.acts[u].push_back(std::move(ra));
        }
    }
    auto x = detail::solve_reach(sys, mode);
    for (std::size_t i = 0; i < be.inc.size(); ++i) {
        auto it = std::lower_bound(be.b_states.begin(), be.b_states.end(), be.inc[i]);
        int local = static_cast<int>(it - be.b_states.begin());
        if (unknown_of[local] >= 0) out.coords[i] = x[unknown_of[local]];
    }
    return out;
}

void require_valid(const Mdp& m, const DirectedTreePartition& p) {
    auto errs = validate_model(m);
    if (!errs.empty()) throw Error("invalid model: " + errs.front());
    auto perrs = validate_partition(m, p);
    if (!perrs.empty()) throw Error("invalid partition: " + perrs.front());
}

bool candidate_before(const PartialSubsystem& a, const PartialSubsystem& b) {
    if (a.size != b.size) return a.size < b.size;
    return a.states.lex_compare(b.states) < 0;
}

}  // namespace

IPoint i_point(const Mdp& m, const DirectedTreePartition& p, int block, const StateSet& T,
               Mode mode) {
    auto bi = block_interfaces(m, p, block);
    StateSet incset = StateSet::from_elements(m.num_states, bi.inc);
    StateSet reach = reachable_from(m, incset);
    if (!T.is_subset_of(reach))
        throw Error("i_point: T escapes the forward closure of inc(B)");
    auto vals = reach_values(induced_subsystem(m, T), mode);
    IPoint out;
    out.interface = bi.inc;
    out.coords.reserve(bi.inc.size());
    for (int q : bi.inc) out.coords.push_back(T.contains(q) ? vals[q] : Rational(0));
    return out;
}

namespace {

std::vector<StateSet> block_subsets(const Mdp& m, const DirectedTreePartition& p, int block,
                                    bool apply_phi);

}  // namespace

std::vector<StateSet> enumerate_phi_subsets(const Mdp& m, const DirectedTreePartition& p,
                                            int block) {
    return block_subsets(m, p, block, true);
}

namespace {

std::vector<StateSet> block_subsets(const Mdp& m, const DirectedTreePartition& p, int block,
                                    bool apply_phi) {
    auto bi = block_interfaces(m, p, block);
    const auto& bs = p.blocks[block];
    const int k = static_cast<int>(bs.size());
    if (k > 22)
        throw Error("enumerate_phi_subsets: block of size " + std::to_string(k) +
                    " is too large to enumerate");
    std::vector<int> local_of(m.num_states, -1);
    for (int i = 0; i < k; ++i) local_of[bs[i]] = i;

    std::uint32_t inc_mask = 0, exit_mask = 0, goal_mask = 0;
    for (int q : bi.inc) inc_mask |= 1u << local_of[q];
    for (int q : bi.exit) exit_mask |= 1u << local_of[q];
    for (int i = 0; i < k; ++i)
        if (m.goal.contains(bs[i])) goal_mask |= 1u << i;

    std::vector<std::uint32_t> pred(k, 0), succ(k, 0);
    for (int i = 0; i < k; ++i) {
        for (const auto& act : m.actions[bs[i]]) {
            for (const auto& tr : act.transitions) {
                int j = local_of[tr.target];
                if (j >= 0 && p.block_of[tr.target] == block) {
                    succ[i] |= 1u << j;
                    pred[j] |= 1u << i;
                }
            }
        }
    }

    std::vector<StateSet> models;
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
        bool ok = true;
        for (int i = 0; apply_phi && i < k && ok; ++i) {
            if (!((mask >> i) & 1)) continue;
            if (!((inc_mask >> i) & 1) && !(mask & pred[i])) ok = false;
            // Goal traps are value sinks; the successor requirement applies
            // to states that must pass their value on.
            if (ok && !((exit_mask >> i) & 1) && !((goal_mask >> i) & 1) && !(mask & succ[i]))
                ok = false;
        }
        if (!ok) continue;
        StateSet s(m.num_states);
        for (int i = 0; i < k; ++i)
            if ((mask >> i) & 1) s.insert(bs[i]);
        models.push_back(std::move(s));
    }
    std::sort(models.begin(), models.end(), [](const StateSet& a, const StateSet& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a.lex_compare(b) < 0;
    });
    return models;
}

}  // namespace

std::vector<std::pair<StateSet, IPoint>> successor_points(
    const std::map<int, std::vector<PartialSubsystem>>& psubsys,
    const Mdp& m, const DirectedTreePartition& p, int block) {
    auto bi = block_interfaces(m, p, block);
    std::vector<int> out_pos(m.num_states, -1);
    for (std::size_t i = 0; i < bi.out.size(); ++i) out_pos[bi.out[i]] = static_cast<int>(i);

    const auto& childs = p.children[block];
    std::vector<const std::vector<PartialSubsystem>*> lists;
    for (int c : childs) {
        auto it = psubsys.find(c);
        if (it == psubsys.end()) throw Error("successor_points: child block not yet processed");
        lists.push_back(&it->second);
    }
    std::vector<std::pair<StateSet, IPoint>> result;
    std::size_t total = 1;
    for (auto* l : lists) total *= l->size();
    if (lists.empty()) total = 1;
    for (auto* l : lists)
        if (l->empty()) total = 0;
    std::vector<std::size_t> idx(lists.size(), 0);
    for (std::size_t c = 0; c < total; ++c) {
        // Decode child-then-stored-index lexicographic order.
        std::size_t rem = c;
        for (std::size_t i = lists.size(); i-- > 0;) {
            idx[i] = rem % lists[i]->size();
            rem /= lists[i]->size();
        }
        StateSet u(m.num_states);
        IPoint point;
        point.interface = bi.out;
        point.coords.assign(bi.out.size(), Rational(0));
        for (std::size_t i = 0; i < lists.size(); ++i) {
            const auto& ps = (*lists[i])[idx[i]];
            u = u.united(ps.states);
            for (std::size_t j = 0; j < ps.value.interface.size(); ++j)
                point.coords[out_pos[ps.value.interface[j]]] = ps.value.coords[j];
        }
        result.emplace_back(std::move(u), std::move(point));
    }
    return result;
}

IPoint evaluate_candidate(const Mdp& m, const DirectedTreePartition& p, int block,
                          const StateSet& sb, const ValueAssumption& f, Mode mode) {
    auto bi = block_interfaces(m, p, block);
    StateSet blockset = StateSet::from_elements(m.num_states, p.blocks[block]);
    if (!sb.is_subset_of(blockset)) throw Error("evaluate_candidate: S_B escapes the block");
    std::vector<int> out_pos(m.num_states, -1);
    for (std::size_t i = 0; i < bi.out.size(); ++i) out_pos[bi.out[i]] = static_cast<int>(i);
    std::vector<Rational> fvals(bi.out.size(), Rational(0));
    for (const auto& [s, v] : f.value) {
        if (out_pos[s] < 0) throw Error("evaluate_candidate: dom(f) escapes out(B)");
        fvals[out_pos[s]] = v;
    }
    BlockEval be = make_block_eval(m, p, block, bi);
    return eval_local(be, sb, fvals, mode);
}

namespace {

bool beats_strong(const PartialSubsystem& a, const PartialSubsystem& b) {
    // a removes b: no larger, pointwise >=, ties to the (size, lex) smaller.
    if (a.size > b.size) return false;
    if (!pareto_leq(b.value, a.value)) return false;
    bool equal_points = coords_compare(a.value.coords, b.value.coords) == 0;
    if (equal_points && a.size == b.size) return a.states.lex_compare(b.states) < 0;
    return true;
}

bool is_projection_of(const std::vector<Rational>& q, const std::vector<Rational>& p) {
    bool proper = false;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == p[i]) continue;
        if (q[i] != 0) return false;
        proper = true;
    }
    return proper;
}

}  // namespace

std::vector<PartialSubsystem> remove_dominated(std::vector<PartialSubsystem> cands,
                                               DominationKind kind, int interface_cap) {
    if (cands.empty()) return cands;
    const std::vector<int> interface = cands.front().value.interface;
    for (const auto& c : cands)
        if (c.value.interface != interface || c.block != cands.front().block)
            throw Error("remove_dominated: candidates mix blocks or interfaces");

    std::sort(cands.begin(), cands.end(), candidate_before);

    // Strong pass; for standard domination this is an exact pre-filter, as a
    // pointwise-dominated point is a convex combination of the projections
    // of its dominator.
    std::vector<char> strong_dominated(cands.size(), 0);
    for (std::size_t i = 0; i < cands.size(); ++i)
        for (std::size_t j = 0; j < cands.size(); ++j)
            if (j != i && beats_strong(cands[j], cands[i])) {
                strong_dominated[i] = 1;
                break;
            }
    std::vector<PartialSubsystem> survivors;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (!strong_dominated[i]) survivors.push_back(std::move(cands[i]));
    if (kind == DominationKind::Strong) return survivors;

    // Standard: ascending size classes through one incremental hull; a
    // candidate stays only while its point is a hull vertex at its class's
    // turn.
    ExtremeSet hull(interface);
    std::vector<PartialSubsystem> tentative;
    std::size_t i = 0;
    while (i < survivors.size()) {
        std::size_t j = i;
        std::vector<IPoint> batch;
        while (j < survivors.size() && survivors[j].size == survivors[i].size) {
            auto projections = project_all(survivors[j].value, interface_cap);
            batch.insert(batch.end(), projections.begin(), projections.end());
            ++j;
        }
        hull.insert(batch);
        for (std::size_t t = i; t < j; ++t)
            if (hull.is_vertex(survivors[t].value.coords)) tentative.push_back(std::move(survivors[t]));
        i = j;
    }

    // A kept point that coincides with a projection of another kept
    // candidate of no larger size is still dominated (Def. 15 with a
    // singleton set); the relation is acyclic, so one pass suffices.
    std::vector<char> proj_dominated(tentative.size(), 0);
    for (std::size_t a = 0; a < tentative.size(); ++a)
        for (std::size_t b = 0; b < tentative.size(); ++b) {
            if (a == b || tentative[b].size > tentative[a].size) continue;
            if (is_projection_of(tentative[a].value.coords, tentative[b].value.coords)) {
                proj_dominated[a] = 1;
                break;
            }
        }
    std::vector<PartialSubsystem> out;
    for (std::size_t a = 0; a < tentative.size(); ++a)
        if (!proj_dominated[a]) out.push_back(std::move(tentative[a]));
    return out;
}

bool prune_candidate(const PartialSubsystem& cand, const SearchConfig& cfg,
                     const BlockPruneContext& ctx) {
    if (cfg.enable_value_sum_prune && ctx.goal_in_closure) {
        Rational sum(0);
        for (const auto& c : cand.value.coords) sum += c;
        if (sum < cfg.lambda) return true;
    }
    // The empty set is everyone's subset; the path-length argument only
    // applies to candidates that a witness actually has to reach.
    if (cfg.enable_size_bound_prune && cfg.size_upper_bound && cand.size > 0) {
        if (ctx.entry_distance + cand.size > *cfg.size_upper_bound) return true;
    }
    return false;
}

namespace {

BlockPruneContext make_prune_context(const Mdp& m, const BlockInterfaces& bi) {
    BlockPruneContext ctx;
    ctx.goal_in_closure = m.goal.is_subset_of(bi.closure);
    StateSet init = m.initial_support();
    if (!init.intersected(bi.closure).empty()) {
        ctx.entry_distance = 0;
        return ctx;
    }
    const int unreachable = m.num_states + 1;
    std::vector<int> dist(m.num_states, -1);
    std::deque<int> queue;
    for (int s : init.elements()) {
        dist[s] = 1;
        queue.push_back(s);
    }
    auto succ = m.underlying_successors();
    int best = unreachable;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        if (dist[u] >= best) continue;
        for (int v : succ[u]) {
            if (bi.closure.contains(v)) {
                best = std::min(best, dist[u]);
            } else if (dist[v] == -1) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    ctx.entry_distance = best;
    return ctx;
}

}  // namespace

std::optional<WitnessResult> minimal_witness(const Mdp& m, const DirectedTreePartition& p,
                                             const SearchConfig& cfg, SearchStats* stats) {
    cfg.check();
    require_valid(m, p);
    const std::uint64_t lp_before = hull_lp_calls();
    SearchStats local_stats;

    const int nblocks = static_cast<int>(p.blocks.size());
    std::vector<BlockInterfaces> interfaces(nblocks);
    std::vector<BlockEval> evals(nblocks);
    std::vector<std::vector<StateSet>> phi(nblocks);
    std::vector<BlockPruneContext> prune_ctx(nblocks);
    for (int b = 0; b < nblocks; ++b) {
        interfaces[b] = block_interfaces(m, p, b);
        if (static_cast<int>(interfaces[b].inc.size()) > cfg.interface_cap)
            throw Error("minimal_witness: interface of block " + std::to_string(b) + " has " +
                        std::to_string(interfaces[b].inc.size()) + " states, over the cap of " +
                        std::to_string(cfg.interface_cap));
        evals[b] = make_block_eval(m, p, b, interfaces[b]);
        phi[b] = block_subsets(m, p, b, cfg.use_phi_filter);
        if (cfg.enable_value_sum_prune || cfg.enable_size_bound_prune)
            prune_ctx[b] = make_prune_context(m, interfaces[b]);
    }

    std::vector<std::vector<PartialSubsystem>> psubsys(nblocks);
    for (auto it = p.topo_order.rbegin(); it != p.topo_order.rend(); ++it) {
        const int b = *it;
        ++local_stats.blocks_processed;
        const auto& childs = p.children[b];
        std::vector<int> out_pos(m.num_states, -1);
        for (std::size_t i = 0; i < interfaces[b].out.size(); ++i)
            out_pos[interfaces[b].out[i]] = static_cast<int>(i);

        std::size_t combos = 1;
        for (int c : childs) combos *= psubsys[c].size();
        const std::size_t grid = phi[b].size() * combos;
        local_stats.candidates_generated += grid;

        std::vector<PartialSubsystem> cands(grid);
        parallel_for(grid, cfg.parallelism, [&](std::size_t g) {
            const StateSet& sb = phi[b][g / combos];
            std::size_t rem = g % combos;
            StateSet states = sb;
            int size = sb.size();
            std::vector<Rational> fvals(interfaces[b].out.size(), Rational(0));
            for (std::size_t i = childs.size(); i-- > 0;) {
                const auto& list = psubsys[childs[i]];
                const auto& chosen = list[rem % list.size()];
                rem /= list.size();
                states = states.united(chosen.states);
                size += chosen.size;
                for (std::size_t j = 0; j < chosen.value.interface.size(); ++j)
                    fvals[out_pos[chosen.value.interface[j]]] = chosen.value.coords[j];
            }
            PartialSubsystem cand;
            cand.block = b;
            cand.value = eval_local(evals[b], sb, fvals, cfg.mode);
            cand.states = std::move(states);
            cand.size = size;
            cands[g] = std::move(cand);
        });

        if (cfg.enable_value_sum_prune || cfg.enable_size_bound_prune) {
            std::vector<PartialSubsystem> kept;
            kept.reserve(cands.size());
            for (auto& c : cands) {
                if (prune_candidate(c, cfg, prune_ctx[b]))
                    ++local_stats.candidates_pruned;
                else
                    kept.push_back(std::move(c));
            }
            cands = std::move(kept);
        }
        psubsys[b] = remove_dominated(std::move(cands), cfg.domination, cfg.interface_cap);
        local_stats.candidates_kept += psubsys[b].size();
    }

    std::optional<WitnessResult> result;
    const int root = p.root();
    for (const auto& cand : psubsys[root]) {
        Rational achieved(0);
        for (std::size_t i = 0; i < cand.value.interface.size(); ++i)
            achieved += m.initial[cand.value.interface[i]] * cand.value.coords[i];
        if (achieved >= cfg.lambda) {
            // Independent re-verification of the exact value.
            auto vals = reach_values(induced_subsystem(m, cand.states), cfg.mode);
            Rational check(0);
            for (int s = 0; s < m.num_states; ++s)
                if (cand.states.contains(s)) check += m.initial[s] * vals[s];
            if (check != achieved)
                throw Error("internal: stored witness value disagrees with the exact re-solve");
            result = WitnessResult{cand.states, cand.size, achieved};
            break;
        }
    }

    local_stats.hull_lp_calls = hull_lp_calls() - lp_before;
    if (stats) *stats = local_stats;
    return result;
}

std::optional<WitnessResult> brute_force_minimal_witness(const Mdp& m, const SearchConfig& cfg,
                                                         int cap) {
    auto errs = validate_model(m);
    if (!errs.empty()) throw Error("invalid model: " + errs.front());
    if (m.num_states > cap)
        throw Error("brute_force_minimal_witness: model has " + std::to_string(m.num_states) +
                    " states, over the cap of " + std::to_string(cap));
    if (cfg.lambda <= 0)
        return WitnessResult{StateSet(m.num_states), 0, Rational(0)};
    if (cfg.lambda > 1) return std::nullopt;

    const int n = m.num_states;
    StateSet init = m.initial_support();
    auto value_of = [&](const StateSet& s) {
        auto vals = reach_values(induced_subsystem(m, s), cfg.mode);
        Rational v(0);
        for (int q : s.elements()) v += m.initial[q] * vals[q];
        return v;
    };
    for (int k = 1; k <= n; ++k) {
        std::vector<int> comb(k);
        for (int i = 0; i < k; ++i) comb[i] = i;
        while (true) {
            StateSet s = StateSet::from_elements(n, comb);
            // Zero-value subsets cannot meet a positive threshold.
            if (!s.intersected(m.goal).empty() && !s.intersected(init).empty()) {
                Rational v = value_of(s);
                if (v >= cfg.lambda) return WitnessResult{s, k, v};
            }
            int i = k - 1;
            while (i >= 0 && comb[i] == n - k + i) --i;
            if (i < 0) break;
            ++comb[i];
            for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
        }
    }
    return std::nullopt;
}

}  // namespace treewit

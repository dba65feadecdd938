#include "treewit/mdp.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "treewit/error.hpp"

namespace treewit {

void Mdp::add_transition(int from, const std::string& label, int to, const Rational& p) {
    if (from < 0 || from >= num_states || to < 0 || to >= num_states)
        throw Error("transition endpoint out of range");
    if (p < 0 || p > 1) throw Error("transition probability outside [0,1]");
    if (p == 0) return;  // dropped at construction
    Rational canon = p;
    canon.canonicalize();
    auto& acts = actions[from];
    auto it = std::find_if(acts.begin(), acts.end(),
                           [&](const ChoiceAction& a) { return a.label == label; });
    if (it == acts.end()) {
        acts.push_back(ChoiceAction{label, {}});
        it = std::prev(acts.end());
    }
    it->transitions.push_back(Transition{to, canon});
}

std::vector<std::vector<int>> Mdp::underlying_successors() const {
    std::vector<std::vector<int>> succ(num_states);
    for (int s = 0; s < num_states; ++s) {
        std::set<int> t;
        for (const auto& a : actions[s])
            for (const auto& tr : a.transitions) t.insert(tr.target);
        succ[s].assign(t.begin(), t.end());
    }
    return succ;
}

std::vector<std::vector<int>> Mdp::underlying_predecessors() const {
    std::vector<std::vector<int>> pred(num_states);
    auto succ = underlying_successors();
    for (int s = 0; s < num_states; ++s)
        for (int t : succ[s]) pred[t].push_back(s);
    for (auto& p : pred) {
        std::sort(p.begin(), p.end());
        p.erase(std::unique(p.begin(), p.end()), p.end());
    }
    return pred;
}

std::string mode_name(Mode m) { return m == Mode::Min ? "min" : "max"; }

std::vector<std::string> validate_model(const Mdp& m) {
    std::vector<std::string> out;
    if (static_cast<int>(m.actions.size()) != m.num_states ||
        static_cast<int>(m.initial.size()) != m.num_states || m.goal.universe() != m.num_states) {
        out.push_back("internal: field sizes disagree with num_states");
        return out;
    }
    for (int s = 0; s < m.num_states; ++s) {
        for (std::size_t ai = 0; ai < m.actions[s].size(); ++ai) {
            const auto& act = m.actions[s][ai];
            Rational sum(0);
            std::set<int> seen;
            for (const auto& tr : act.transitions) {
                if (tr.target < 0 || tr.target >= m.num_states) {
                    out.push_back("state " + std::to_string(s) + " action '" + act.label +
                                  "': target out of range");
                    continue;
                }
                if (tr.prob <= 0 || tr.prob > 1)
                    out.push_back("state " + std::to_string(s) + " action '" + act.label +
                                  "': probability outside (0,1]");
                if (!seen.insert(tr.target).second)
                    out.push_back("state " + std::to_string(s) + " action '" + act.label +
                                  "': duplicate target " + std::to_string(tr.target));
                sum += tr.prob;
            }
            if (sum > 1)
                out.push_back("state " + std::to_string(s) + " action '" + act.label +
                              "': outgoing probabilities sum to " + to_string(sum) + " > 1");
            if (m.goal.contains(s) && !act.transitions.empty())
                out.push_back("goal state " + std::to_string(s) + " has outgoing transitions");
        }
    }
    Rational isum(0);
    for (int s = 0; s < m.num_states; ++s) {
        if (m.initial[s] < 0 || m.initial[s] > 1)
            out.push_back("initial probability of state " + std::to_string(s) +
                          " outside [0,1]");
        isum += m.initial[s];
    }
    if (isum > 1) out.push_back("initial probabilities sum to " + to_string(isum) + " > 1");
    return out;
}

Mdp induced_subsystem(const Mdp& m, const StateSet& keep) {
    if (keep.universe() != m.num_states) throw Error("induced_subsystem: universe mismatch");
    Mdp out(m.num_states);
    for (int s = 0; s < m.num_states; ++s) {
        out.actions[s].reserve(m.actions[s].size());
        for (const auto& a : m.actions[s]) {
            ChoiceAction copy{a.label, {}};
            if (keep.contains(s)) {
                for (const auto& tr : a.transitions)
                    if (keep.contains(tr.target)) copy.transitions.push_back(tr);
            }
            out.actions[s].push_back(std::move(copy));
        }
        if (keep.contains(s)) out.initial[s] = m.initial[s];
    }
    out.goal = m.goal.intersected(keep);
    return out;
}

StateSet reachable_from(const Mdp& m, const StateSet& from) {
    StateSet seen = from;
    std::deque<int> queue;
    for (int s : from.elements()) queue.push_back(s);
    auto succ = m.underlying_successors();
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        for (int t : succ[s]) {
            if (!seen.contains(t)) {
                seen.insert(t);
                queue.push_back(t);
            }
        }
    }
    return seen;
}

namespace detail {

namespace {

/// Solves (I - Q) x = b exactly for the states listed in `active` (indices
/// into the system), where row i of Q holds the policy action's moves
/// restricted to active states. Deterministic pivoting: columns in the given
/// order, first nonzero row.
std::vector<Rational> gauss_policy_solve(const ReachSystem& sys,
                                         const std::vector<int>& policy,
                                         const std::vector<int>& active) {
    const int k = static_cast<int>(active.size());
    std::vector<int> pos(sys.acts.size(), -1);
    for (int i = 0; i < k; ++i) pos[active[i]] = i;

    std::vector<std::vector<Rational>> a(k, std::vector<Rational>(k + 1, Rational(0)));
    for (int i = 0; i < k; ++i) {
        const ReachAction& act = sys.acts[active[i]][policy[active[i]]];
        a[i][i] = 1;
        for (const auto& [j, p] : act.moves) {
            if (pos[j] >= 0) a[i][pos[j]] -= p;
        }
        a[i][k] = act.direct;
    }
    for (int c = 0; c < k; ++c) {
        int piv = -1;
        for (int r = c; r < k; ++r) {
            if (a[r][c] != 0) {
                piv = r;
                break;
            }
        }
        if (piv < 0) throw Error("internal: singular reachability system");
        if (piv != c) std::swap(a[piv], a[c]);
        for (int r = c + 1; r < k; ++r) {
            if (a[r][c] == 0) continue;
            Rational factor = a[r][c] / a[c][c];
            a[r][c] = 0;
            for (int j = c + 1; j <= k; ++j) a[r][j] -= factor * a[c][j];
        }
    }
    std::vector<Rational> x(k, Rational(0));
    for (int c = k - 1; c >= 0; --c) {
        Rational acc = a[c][k];
        for (int j = c + 1; j < k; ++j) acc -= a[c][j] * x[j];
        x[c] = acc / a[c][c];
    }
    std::vector<Rational> full(sys.acts.size(), Rational(0));
    for (int i = 0; i < k; ++i) full[active[i]] = x[i];
    return full;
}

/// States that can reach a positive one-step goal mass through the moves of
/// the listed actions (policy[i] < 0 means: any action of i counts).
std::vector<char> backward_reach(const ReachSystem& sys, const std::vector<int>& policy) {
    const int n = static_cast<int>(sys.acts.size());
    std::vector<std::vector<int>> rev(n);
    std::deque<int> queue;
    std::vector<char> hit(n, 0);
    auto consider = [&](int i, const ReachAction& act) {
        if (act.direct > 0 && !hit[i]) {
            hit[i] = 1;
            queue.push_back(i);
        }
        for (const auto& [j, p] : act.moves) rev[j].push_back(i);
    };
    for (int i = 0; i < n; ++i) {
        if (policy.empty()) {
            for (const auto& act : sys.acts[i]) consider(i, act);
        } else if (!sys.acts[i].empty()) {
            consider(i, sys.acts[i][policy[i]]);
        }
    }
    while (!queue.empty()) {
        int j = queue.front();
        queue.pop_front();
        for (int i : rev[j]) {
            if (!hit[i]) {
                hit[i] = 1;
                queue.push_back(i);
            }
        }
    }
    return hit;
}

Rational action_backup(const ReachAction& act, const std::vector<Rational>& x) {
    Rational v = act.direct;
    for (const auto& [j, p] : act.moves) v += p * x[j];
    return v;
}

}  // namespace

std::vector<Rational> solve_reach(const ReachSystem& sys, Mode mode) {
    const int n = static_cast<int>(sys.acts.size());
    std::vector<int> policy(n, 0);

    // Restrict to states with a nonzero value: for max those that can reach
    // goal mass at all, for min those without an everywhere-avoiding action.
    std::vector<char> relevant;
    if (mode == Mode::Max) {
        relevant = backward_reach(sys, {});
    } else {
        std::vector<char> avoid(n, 1);
        bool changed = true;
        while (changed) {
            changed = false;
            for (int i = 0; i < n; ++i) {
                if (!avoid[i]) continue;
                if (sys.acts[i].empty()) continue;  // trap, avoids forever
                bool ok = false;
                for (const auto& act : sys.acts[i]) {
                    if (act.direct > 0) continue;
                    bool stays = true;
                    for (const auto& [j, p] : act.moves) {
                        if (!avoid[j]) {
                            stays = false;
                            break;
                        }
                    }
                    if (stays) {
                        ok = true;
                        break;
                    }
                }
                if (!ok) {
                    avoid[i] = 0;
                    changed = true;
                }
            }
        }
        relevant.assign(n, 0);
        for (int i = 0; i < n; ++i) relevant[i] = !avoid[i];
    }

    std::vector<int> live;
    for (int i = 0; i < n; ++i)
        if (relevant[i] && !sys.acts[i].empty()) live.push_back(i);

    bool single_action = true;
    for (int i : live)
        if (sys.acts[i].size() > 1) single_action = false;

    std::vector<Rational> x(n, Rational(0));
    while (true) {
        std::vector<int> active;
        if (mode == Mode::Max) {
            // Least fixed point per policy: only states that reach goal mass
            // under the current policy get a nonzero value.
            auto hit = backward_reach(sys, policy);
            for (int i : live)
                if (hit[i]) active.push_back(i);
        } else {
            active = live;
        }
        x = gauss_policy_solve(sys, policy, active);
        if (single_action) break;

        bool improved = false;
        for (int i : live) {
            const auto& acts = sys.acts[i];
            int best = policy[i];
            Rational best_val = x[i];
            for (int a = 0; a < static_cast<int>(acts.size()); ++a) {
                Rational v = action_backup(acts[a], x);
                bool better = mode == Mode::Max ? v > best_val : v < best_val;
                if (better) {
                    best = a;
                    best_val = v;
                }
            }
            if (best != policy[i]) {
                policy[i] = best;
                improved = true;
            }
        }
        if (!improved) break;
    }
    return x;
}

}  // namespace detail

std::vector<Rational> reach_values(const Mdp& m, Mode mode) {
    auto errs = validate_model(m);
    if (!errs.empty()) throw Error("invalid model: " + errs.front());

    std::vector<int> unknown_of(m.num_states, -1);
    std::vector<int> states;
    for (int s = 0; s < m.num_states; ++s) {
        if (!m.goal.contains(s)) {
            unknown_of[s] = static_cast<int>(states.size());
            states.push_back(s);
        }
    }
    detail::ReachSystem sys;
    sys.acts.resize(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (const auto& act : m.actions[states[i]]) {
            detail::ReachAction ra;
            ra.direct = 0;
            for (const auto& tr : act.transitions) {
                if (m.goal.contains(tr.target))
                    ra.direct += tr.prob;
                else
                    ra.moves.emplace_back(unknown_of[tr.target], tr.prob);
            }
            sys.acts[i].push_back(std::move(ra));
        }
    }
    auto solved = detail::solve_reach(sys, mode);
    std::vector<Rational> out(m.num_states, Rational(0));
    for (int s = 0; s < m.num_states; ++s)
        out[s] = m.goal.contains(s) ? Rational(1) : solved[unknown_of[s]];
    return out;
}

Mdp apply_assumption(const Mdp& m, const StateSet& sub, const ValueAssumption& f) {
    for (const auto& [s, v] : f.value) {
        if (!sub.contains(s)) throw Error("apply_assumption: dom(f) not contained in S'");
        if (v < 0 || v > 1) throw Error("apply_assumption: assumption value outside [0,1]");
    }
    Mdp out = induced_subsystem(m, sub);

    // Designated target: the lowest-id goal state that keeps its goal role.
    int target = -1;
    for (int g : out.goal.elements()) {
        if (!f.defined_on(g)) {
            target = g;
            break;
        }
    }
    bool need_target = false;
    for (const auto& [s, v] : f.value)
        if (v > 0) need_target = true;
    if (target < 0 && need_target) {
        // Fresh virtual goal state, id = num_states.
        target = out.num_states;
        Mdp grown(out.num_states + 1);
        for (int s = 0; s < out.num_states; ++s) {
            grown.actions[s] = std::move(out.actions[s]);
            grown.initial[s] = out.initial[s];
        }
        for (int g : out.goal.elements()) grown.goal.insert(g);
        grown.goal.insert(target);
        out = std::move(grown);
    }
    for (const auto& [s, v] : f.value) {
        out.goal.erase(s);
        out.actions[s].clear();
        ChoiceAction proxy{"assume", {}};
        if (v > 0) proxy.transitions.push_back(Transition{target, v});
        out.actions[s].push_back(std::move(proxy));
    }
    return out;
}

std::map<int, Rational> assumed_values(const Mdp& m, const StateSet& sub,
                                       const ValueAssumption& f, Mode mode,
                                       const std::vector<int>& query) {
    for (int q : query)
        if (!sub.contains(q)) throw Error("assumed_values: query state outside S'");
    Mdp mod = apply_assumption(m, sub, f);
    auto vals = reach_values(mod, mode);
    std::map<int, Rational> out;
    for (int q : query) out[q] = vals[q];
    return out;
}

}  // namespace treewit

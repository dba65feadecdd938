#pragma once

#include <deque>
#include <random>
#include <vector>

#include "treewit/error.hpp"
#include "treewit/mdp.hpp"
#include "treewit/rational.hpp"

namespace twtest {

using namespace treewit;

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    int range(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(gen() % static_cast<std::uint64_t>(hi - lo + 1));
    }
};

inline bool weakly_connected(const Mdp& m) {
    if (m.num_states <= 1) return true;
    std::vector<std::vector<int>> und(m.num_states);
    auto succ = m.underlying_successors();
    for (int s = 0; s < m.num_states; ++s)
        for (int t : succ[s]) {
            und[s].push_back(t);
            und[t].push_back(s);
        }
    std::vector<char> seen(m.num_states, 0);
    std::deque<int> queue{0};
    seen[0] = 1;
    int count = 1;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (int v : und[u])
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                queue.push_back(v);
            }
    }
    return count == m.num_states;
}

/// Forward-leaning random model with goal traps in the upper half, initial
/// mass at the bottom, guaranteed weakly connected.
inline Mdp random_model(Rng& rng, int max_states, int max_actions) {
    while (true) {
        int n = rng.range(3, max_states);
        Mdp m(n);
        for (int s = 0; s < n; ++s) {
            int acts = rng.range(1, max_actions);
            for (int a = 0; a < acts; ++a) {
                std::string label(1, static_cast<char>('a' + a));
                std::vector<int> targets;
                if (s + 1 < n) targets.push_back(s + 1);
                int extra = rng.range(0, 2);
                for (int e = 0; e < extra; ++e) {
                    int t = rng.range(0, n - 1);
                    if (t != s || rng.range(0, 1)) targets.push_back(t);
                }
                std::sort(targets.begin(), targets.end());
                targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
                if (targets.empty()) continue;
                int leak = rng.range(0, 3);
                std::vector<int> weights(targets.size());
                int total = leak;
                for (auto& w : weights) {
                    w = rng.range(1, 8);
                    total += w;
                }
                for (std::size_t i = 0; i < targets.size(); ++i)
                    m.add_transition(s, label, targets[i], make_rational(weights[i], total));
            }
        }
        // Goal traps in the upper half.
        int goals = rng.range(1, std::max(1, n / 4));
        for (int g = 0; g < goals; ++g) {
            int s = rng.range(n / 2, n - 1);
            m.actions[s].clear();
            m.actions[s].push_back(ChoiceAction{"a", {}});
            m.goal.insert(s);
        }
        for (int s = 0; s < n; ++s)  // dtmc-compatible trap shape
            if (m.goal.contains(s)) {
                m.actions[s].clear();
                m.actions[s].push_back(ChoiceAction{"a", {}});
            }
        m.initial[0] = make_rational(rng.range(1, 6), 8);
        if (n > 1 && rng.range(0, 1) && !m.goal.contains(1))
            m.initial[1] = make_rational(1, 8);
        if (m.goal.contains(0)) continue;
        if (!weakly_connected(m)) continue;
        if (!validate_model(m).empty()) continue;
        return m;
    }
}

inline Mdp random_dtmc(Rng& rng, int max_states = 12) { return random_model(rng, max_states, 1); }
inline Mdp random_mdp(Rng& rng, int max_states = 10, int max_actions = 2) {
    return random_model(rng, max_states, max_actions);
}

/// Full-model value from the initial distribution.
inline Rational initial_value(const Mdp& m, Mode mode) {
    auto vals = reach_values(m, mode);
    Rational v(0);
    for (int s = 0; s < m.num_states; ++s) v += m.initial[s] * vals[s];
    return v;
}

/// Achievable threshold: a rational fraction of the full-model value.
inline Rational sample_lambda(Rng& rng, const Mdp& m, Mode mode) {
    static const Rational fracs[] = {Rational(1),      Rational(3, 4), Rational(1, 2),
                                     Rational(1, 3),   Rational(1, 4), Rational(1, 8)};
    return initial_value(m, mode) * fracs[rng.range(0, 5)];
}

/// Per-state optimum over every memoryless scheduler, by exhaustive
/// enumeration; the independent oracle for reach_values on MDPs.
inline std::vector<Rational> scheduler_enum_values(const Mdp& m, Mode mode) {
    std::vector<int> counts(m.num_states);
    long long total = 1;
    for (int s = 0; s < m.num_states; ++s) {
        counts[s] = std::max<int>(1, m.actions[s].size());
        total *= counts[s];
        if (total > 100000) throw Error("scheduler_enum_values: too many policies");
    }
    std::vector<Rational> best;
    for (long long idx = 0; idx < total; ++idx) {
        Mdp fixed(m.num_states);
        fixed.initial = m.initial;
        fixed.goal = m.goal;
        long long rem = idx;
        for (int s = 0; s < m.num_states; ++s) {
            int pick = static_cast<int>(rem % counts[s]);
            rem /= counts[s];
            if (!m.actions[s].empty()) fixed.actions[s].push_back(m.actions[s][pick]);
        }
        auto vals = reach_values(fixed, Mode::Max);  // single action: plain solve
        if (best.empty()) {
            best = vals;
        } else {
            for (int s = 0; s < m.num_states; ++s) {
                bool better = mode == Mode::Max ? vals[s] > best[s] : vals[s] < best[s];
                if (better) best[s] = vals[s];
            }
        }
    }
    return best;
}

}  // namespace twtest

#pragma once

#include <map>
#include <string>
#include <vector>

#include "treewit/rational.hpp"
#include "treewit/stateset.hpp"

namespace treewit {

struct Transition {
    int target = 0;
    Rational prob;
};

struct ChoiceAction {
    std::string label;
    std::vector<Transition> transitions;
};

/// Sub-stochastic MDP (or DTMC when every state has exactly one action).
/// Row sums and the initial distribution may be below one; the missing mass
/// is an implicit failure and never materialized as a state.
struct Mdp {
    int num_states = 0;
    std::vector<std::vector<ChoiceAction>> actions;  // per state, ordered
    std::vector<Rational> initial;                   // per state, 0 if absent
    StateSet goal;

    Mdp() = default;
    explicit Mdp(int n)
        : num_states(n), actions(n), initial(n, Rational(0)), goal(n) {}

    /// Adds a transition under the given label, creating the action on first
    /// use. Zero-probability transitions are dropped.
    void add_transition(int from, const std::string& label, int to, const Rational& p);

    /// Trap states may carry no action row at all; that still counts as
    /// deterministic.
    bool is_dtmc() const {
        for (const auto& a : actions)
            if (a.size() > 1) return false;
        return true;
    }

    std::vector<int> goal_states() const { return goal.elements(); }
    StateSet initial_support() const {
        StateSet s(num_states);
        for (int i = 0; i < num_states; ++i)
            if (initial[i] != 0) s.insert(i);
        return s;
    }

    /// Underlying graph: sorted, deduplicated successor lists.
    std::vector<std::vector<int>> underlying_successors() const;
    std::vector<std::vector<int>> underlying_predecessors() const;
};

enum class Mode { Min, Max };

std::string mode_name(Mode m);

/// Partial [0,1]-valued function on states; the domain is the key set.
struct ValueAssumption {
    std::map<int, Rational> value;

    bool defined_on(int s) const { return value.count(s) > 0; }
    StateSet domain(int universe) const {
        StateSet d(universe);
        for (const auto& [s, v] : value) d.insert(s);
        return d;
    }
};

/// Empty iff the model satisfies all invariants; each entry names the
/// offending state/action and the violated rule.
std::vector<std::string> validate_model(const Mdp& m);

/// Keeps transitions with both endpoints inside `keep`, restricts the
/// initial distribution and the goal set to `keep`. State ids are stable.
Mdp induced_subsystem(const Mdp& m, const StateSet& keep);

/// Forward closure of `from` in the underlying graph.
StateSet reachable_from(const Mdp& m, const StateSet& from);

/// Exact min/max probability of reaching the goal set, per state.
/// DTMCs are solved by exact Gaussian elimination, MDPs by exact policy
/// iteration. Throws on invalid models.
std::vector<Rational> reach_values(const Mdp& m, Mode mode);

/// The assumption-modified system: the subsystem induced by `sub` where
/// every s in dom(f) loses its goal membership and its actions, and instead
/// moves to a designated goal state with probability f(s). If no goal state
/// survives outside dom(f), a fresh one is appended with id num_states.
Mdp apply_assumption(const Mdp& m, const StateSet& sub, const ValueAssumption& f);

/// reach_values(apply_assumption(m, sub, f), mode) restricted to `query`.
std::map<int, Rational> assumed_values(const Mdp& m, const StateSet& sub,
                                       const ValueAssumption& f, Mode mode,
                                       const std::vector<int>& query);

namespace detail {

/// Normal form for exact reachability solving: a set of unknown states, each
/// with a list of actions; an action moves to unknown states with the listed
/// probabilities and contributes `direct` (the one-step probability of
/// hitting a value-1 state). Value-0 sinks are simply absent.
struct ReachAction {
    std::vector<std::pair<int, Rational>> moves;  // (unknown index, probability)
    Rational direct;                              // one-step goal mass
};

struct ReachSystem {
    std::vector<std::vector<ReachAction>> acts;  // per unknown state
};

/// Exact least-fixed-point solution of the min/max Bellman equations.
/// `single_action` skips policy iteration (DTMC case).
std::vector<Rational> solve_reach(const ReachSystem& sys, Mode mode);

}  // namespace detail

}  // namespace treewit

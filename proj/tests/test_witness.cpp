#include "treewit/witness.hpp"

#include "doctest.h"
#include "support.hpp"
#include "treewit/error.hpp"

using namespace treewit;

namespace {

/// s0: 1/2 -> goal, 1/2 -> s1; s1: 1 -> goal. The singleton partition
/// {s0},{s1},{goal} has a triangle quotient, so the valid tree partition
/// groups s0 and s1.
struct ChainFixture {
    Mdp m{3};
    DirectedTreePartition p;
    ChainFixture() {
        m.add_transition(0, "a", 2, Rational(1, 2));
        m.add_transition(0, "a", 1, Rational(1, 2));
        m.add_transition(1, "a", 2, Rational(1));
        m.goal.insert(2);
        m.initial[0] = 1;
        p = DirectedTreePartition::build(underlying_graph(m), {{0, 1}, {2}});
    }
};

}  // namespace

TEST_CASE("i_point basics") {
    ChainFixture fx;
    // Block 0 interface is {0}.
    StateSet empty_t(3);
    CHECK(i_point(fx.m, fx.p, 0, empty_t, Mode::Max).coords == std::vector<Rational>{Rational(0)});
    StateSet full_t = StateSet::full(3);
    CHECK(i_point(fx.m, fx.p, 0, full_t, Mode::Max).coords == std::vector<Rational>{Rational(1)});
    StateSet partial = StateSet::from_elements(3, {0, 2});
    CHECK(i_point(fx.m, fx.p, 0, partial, Mode::Max).coords ==
          std::vector<Rational>{Rational(1, 2)});
    // T escaping reach(inc) is refused: block 1's interface is {2}.
    CHECK_THROWS_AS(i_point(fx.m, fx.p, 1, StateSet::from_elements(3, {0}), Mode::Max), Error);
}

TEST_CASE("phi subsets of an internal chain block") {
    // One block {0,1,2} with 0 -> 1 -> 2, inc = {0}, exit = {2}.
    Mdp m(4);
    m.add_transition(0, "a", 1, Rational(1, 2));
    m.add_transition(1, "a", 2, Rational(1, 2));
    m.add_transition(2, "a", 3, Rational(1, 2));
    m.goal.insert(3);
    m.initial[0] = 1;
    auto p = DirectedTreePartition::build(underlying_graph(m), {{0, 1, 2}, {3}});
    auto subsets = enumerate_phi_subsets(m, p, 0);
    REQUIRE(subsets.size() == 2);
    CHECK(subsets[0].empty());
    CHECK(subsets[1] == StateSet::from_elements(4, {0, 1, 2}));
}

TEST_CASE("phi is vacuous when every state is interface and exit") {
    // Two parallel states both initial, both with edges out of the block.
    Mdp m(3);
    m.add_transition(0, "a", 2, Rational(1, 2));
    m.add_transition(1, "a", 2, Rational(1, 2));
    m.goal.insert(2);
    m.initial[0] = Rational(1, 4);
    m.initial[1] = Rational(1, 4);
    auto p = DirectedTreePartition::build(underlying_graph(m), {{0, 1}, {2}});
    CHECK(enumerate_phi_subsets(m, p, 0).size() == 4);
}

TEST_CASE("a non-interface state without in-block predecessors is never included") {
    // Block {0,1}: 1 has no predecessor at all.
    Mdp m(3);
    m.add_transition(0, "a", 2, Rational(1, 2));
    m.add_transition(1, "a", 2, Rational(1, 2));
    m.goal.insert(2);
    m.initial[0] = 1;
    auto p = DirectedTreePartition::build(underlying_graph(m), {{0, 1}, {2}});
    for (const auto& s : enumerate_phi_subsets(m, p, 0)) CHECK(!s.contains(1));
}

TEST_CASE("goal states pass the successor side of phi") {
    ChainFixture fx;
    auto subsets = enumerate_phi_subsets(fx.m, fx.p, 1);
    REQUIRE(subsets.size() == 2);  // {} and {goal}
    CHECK(subsets[1] == StateSet::from_elements(3, {2}));
}

TEST_CASE("successor_points combines children candidates") {
    ChainFixture fx;
    std::map<int, std::vector<PartialSubsystem>> psubsys;
    // No children: single empty combination.
    auto leaf = successor_points(psubsys, fx.m, fx.p, 1);
    REQUIRE(leaf.size() == 1);
    CHECK(leaf[0].first.empty());
    CHECK(leaf[0].second.coords.empty());

    PartialSubsystem a;
    a.block = 1;
    a.states = StateSet::from_elements(3, {2});
    a.value = IPoint{{2}, {Rational(1)}};
    a.size = 1;
    PartialSubsystem b = a;
    b.states = StateSet(3);
    b.value.coords = {Rational(0)};
    b.size = 0;
    psubsys[1] = {b, a};
    auto one = successor_points(psubsys, fx.m, fx.p, 0);
    REQUIRE(one.size() == 2);
    CHECK(one[0].second.coords == std::vector<Rational>{Rational(0)});
    CHECK(one[1].second.coords == std::vector<Rational>{Rational(1)});
}

TEST_CASE("evaluate_candidate pins interface values") {
    ChainFixture fx;
    ValueAssumption f;
    f.value[2] = Rational(1);
    StateSet sb = StateSet::from_elements(3, {0});
    auto point = evaluate_candidate(fx.m, fx.p, 0, sb, f, Mode::Max);
    CHECK(point.coords == std::vector<Rational>{Rational(1, 2)});  // s1 missing

    sb = StateSet::from_elements(3, {0, 1});
    point = evaluate_candidate(fx.m, fx.p, 0, sb, f, Mode::Max);
    CHECK(point.coords == std::vector<Rational>{Rational(1)});

    f.value[2] = Rational(1, 3);
    point = evaluate_candidate(fx.m, fx.p, 0, sb, f, Mode::Max);
    CHECK(point.coords == std::vector<Rational>{Rational(1, 3)});

    // Empty candidate: zero vector.
    point = evaluate_candidate(fx.m, fx.p, 0, StateSet(3), f, Mode::Max);
    CHECK(point.coords == std::vector<Rational>{Rational(0)});
}

TEST_CASE("evaluate_candidate equals assumed_values on random blocks") {
    twtest::Rng rng(808);
    for (int round = 0; round < 30; ++round) {
        Mdp m = twtest::random_mdp(rng, 9, 2);
        auto p = heuristic_partition(m);
        int b = rng.range(0, static_cast<int>(p.blocks.size()) - 1);
        auto bi = block_interfaces(m, p, b);
        Mode mode = rng.range(0, 1) ? Mode::Max : Mode::Min;

        StateSet sb(m.num_states);
        for (int s : p.blocks[b])
            if (rng.range(0, 2)) sb.insert(s);
        ValueAssumption f;
        for (int q : bi.out) f.value[q] = make_rational(rng.range(0, 4), 4);

        auto fast = evaluate_candidate(m, p, b, sb, f, mode);

        StateSet sub = sb;
        for (int q : bi.out) sub.insert(q);
        std::vector<int> query;
        for (int q : bi.inc)
            if (sb.contains(q)) query.push_back(q);
        auto slow = assumed_values(m, sub, f, mode, query);
        for (std::size_t i = 0; i < bi.inc.size(); ++i) {
            Rational expect = sb.contains(bi.inc[i]) ? slow[bi.inc[i]] : Rational(0);
            CHECK(fast.coords[i] == expect);
        }
    }
}

namespace {

PartialSubsystem cand(int block, std::vector<int> iface, std::vector<Rational> coords,
                      std::vector<int> states, int universe) {
    PartialSubsystem c;
    c.block = block;
    c.states = StateSet::from_elements(universe, states);
    c.size = c.states.size();
    c.value = IPoint{std::move(iface), std::move(coords)};
    return c;
}

}  // namespace

TEST_CASE("remove_dominated: standard removes convex combinations, strong keeps them") {
    std::vector<PartialSubsystem> cands;
    cands.push_back(cand(0, {0, 1}, {Rational(1), Rational(0)}, {2, 3}, 8));
    cands.push_back(cand(0, {0, 1}, {Rational(0), Rational(1)}, {4, 5}, 8));
    cands.push_back(cand(0, {0, 1}, {Rational(1, 2), Rational(1, 2)}, {2, 4, 6}, 8));

    auto standard = remove_dominated(cands, DominationKind::Standard);
    REQUIRE(standard.size() == 2);
    CHECK(standard[0].size == 2);
    CHECK(standard[1].size == 2);

    auto strong = remove_dominated(cands, DominationKind::Strong);
    CHECK(strong.size() == 3);

    auto single = remove_dominated({cands[2]}, DominationKind::Standard);
    CHECK(single.size() == 1);
}

TEST_CASE("remove_dominated drops pointwise-dominated and duplicate candidates") {
    std::vector<PartialSubsystem> cands;
    cands.push_back(cand(0, {0, 1}, {Rational(1), Rational(1)}, {2}, 8));
    cands.push_back(cand(0, {0, 1}, {Rational(1, 2), Rational(1)}, {3}, 8));   // below
    cands.push_back(cand(0, {0, 1}, {Rational(1), Rational(1)}, {4, 5}, 8));   // duplicate, larger
    cands.push_back(cand(0, {0, 1}, {Rational(1), Rational(0)}, {6}, 8));      // projection
    for (auto kind : {DominationKind::Standard, DominationKind::Strong}) {
        auto kept = remove_dominated(cands, kind);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].states == StateSet::from_elements(8, {2}));
    }
}

TEST_CASE("prune_candidate implements both heuristics") {
    SearchConfig cfg = SearchConfig::for_mode(Mode::Max, Rational(1, 2));
    cfg.enable_value_sum_prune = true;
    BlockPruneContext ctx;
    ctx.goal_in_closure = true;
    auto c = cand(0, {0, 1}, {Rational(1, 5), Rational(1, 10)}, {2, 3}, 8);
    CHECK(prune_candidate(c, cfg, ctx));  // 3/10 < 1/2
    ctx.goal_in_closure = false;
    CHECK(!prune_candidate(c, cfg, ctx));

    cfg = SearchConfig::for_mode(Mode::Max, Rational(0));
    cfg.enable_size_bound_prune = true;
    cfg.size_upper_bound = 5;
    ctx.goal_in_closure = false;
    ctx.entry_distance = 4;
    CHECK(prune_candidate(c, cfg, ctx));  // 4 + 2 > 5
    ctx.entry_distance = 3;
    CHECK(!prune_candidate(c, cfg, ctx));

    cfg.size_upper_bound.reset();
    CHECK(!prune_candidate(c, cfg, ctx));
}

TEST_CASE("minimal_witness on the three-state chain") {
    ChainFixture fx;
    auto cfg = SearchConfig::for_mode(Mode::Max, Rational(1, 2));
    auto res = minimal_witness(fx.m, fx.p, cfg);
    REQUIRE(res.has_value());
    CHECK(res->size == 2);
    CHECK(res->states == StateSet::from_elements(3, {0, 2}));
    CHECK(res->value == Rational(1, 2));

    auto brute = brute_force_minimal_witness(fx.m, cfg);
    REQUIRE(brute.has_value());
    CHECK(brute->size == res->size);
}

TEST_CASE("minimal_witness trivial thresholds") {
    ChainFixture fx;
    auto zero = minimal_witness(fx.m, fx.p, SearchConfig::for_mode(Mode::Max, Rational(0)));
    REQUIRE(zero.has_value());
    CHECK(zero->size == 0);
    CHECK(zero->value == 0);

    auto none = minimal_witness(fx.m, fx.p, SearchConfig::for_mode(Mode::Max, Rational(21, 20)));
    CHECK(!none.has_value());

    auto brute_none = brute_force_minimal_witness(fx.m, SearchConfig::for_mode(Mode::Max, Rational(21, 20)));
    CHECK(!brute_none.has_value());
}

TEST_CASE("brute force oracle basics") {
    Mdp m(1);
    m.goal.insert(0);
    m.initial[0] = 1;
    auto res = brute_force_minimal_witness(m, SearchConfig::for_mode(Mode::Max, Rational(1)));
    REQUIRE(res.has_value());
    CHECK(res->size == 1);

    Mdp big(21);
    big.initial[0] = 1;
    big.goal.insert(20);
    for (int i = 0; i < 20; ++i) big.add_transition(i, "a", i + 1, Rational(1, 2));
    CHECK_THROWS_AS(brute_force_minimal_witness(big, SearchConfig::for_mode(Mode::Max, Rational(1, 2))),
                    Error);
}

TEST_CASE("config pairing of mode and domination is enforced") {
    SearchConfig bad = SearchConfig::for_mode(Mode::Min, Rational(1, 2));
    bad.domination = DominationKind::Standard;
    CHECK_THROWS_AS(bad.check(), Error);
    bad = SearchConfig::for_mode(Mode::Max, Rational(1, 2));
    bad.domination = DominationKind::Strong;
    CHECK_THROWS_AS(bad.check(), Error);
}

TEST_CASE("interface cap refusal") {
    ChainFixture fx;
    auto cfg = SearchConfig::for_mode(Mode::Max, Rational(1, 2));
    cfg.interface_cap = 0;
    CHECK_THROWS_AS(minimal_witness(fx.m, fx.p, cfg), Error);
}

TEST_CASE("witness sizes match the oracle on random DTMCs") {
    twtest::Rng rng(20260101);
    for (int round = 0; round < 40; ++round) {
        Mdp m = twtest::random_dtmc(rng, 9);
        auto p = heuristic_partition(m);
        auto cfg = SearchConfig::for_mode(Mode::Max, twtest::sample_lambda(rng, m, Mode::Max));
        auto fast = minimal_witness(m, p, cfg);
        auto slow = brute_force_minimal_witness(m, cfg);
        REQUIRE(fast.has_value() == slow.has_value());
        if (fast) {
            CHECK(fast->size == slow->size);
            CHECK(fast->value >= cfg.lambda);
        }
    }
}

TEST_CASE("witness sizes match the oracle on random MDPs in both modes") {
    twtest::Rng rng(20260202);
    for (int round = 0; round < 30; ++round) {
        Mdp m = twtest::random_mdp(rng, 8, 2);
        auto p = heuristic_partition(m);
        Mode mode = rng.range(0, 1) ? Mode::Max : Mode::Min;
        auto cfg = SearchConfig::for_mode(mode, twtest::sample_lambda(rng, m, mode));
        auto fast = minimal_witness(m, p, cfg);
        auto slow = brute_force_minimal_witness(m, cfg);
        REQUIRE(fast.has_value() == slow.has_value());
        if (fast) CHECK(fast->size == slow->size);
    }
}

TEST_CASE("phi filter, pruning and parallelism never change the answer") {
    twtest::Rng rng(606);
    for (int round = 0; round < 15; ++round) {
        Mdp m = twtest::random_dtmc(rng, 8);
        auto p = heuristic_partition(m);
        auto cfg = SearchConfig::for_mode(Mode::Max, twtest::sample_lambda(rng, m, Mode::Max));
        auto base = minimal_witness(m, p, cfg);

        SearchConfig no_phi = cfg;
        no_phi.use_phi_filter = false;
        auto unfiltered = minimal_witness(m, p, no_phi);
        REQUIRE(base.has_value() == unfiltered.has_value());
        if (base) CHECK(base->size == unfiltered->size);

        SearchConfig pruned = cfg;
        pruned.enable_value_sum_prune = true;
        pruned.enable_size_bound_prune = true;
        pruned.size_upper_bound = base ? base->size : m.num_states;
        auto lean = minimal_witness(m, p, pruned);
        REQUIRE(base.has_value() == lean.has_value());
        if (base) {
            CHECK(base->size == lean->size);
            CHECK(base->states == lean->states);
        }

        SearchConfig wide = cfg;
        wide.parallelism = 4;
        auto parallel = minimal_witness(m, p, wide);
        REQUIRE(base.has_value() == parallel.has_value());
        if (base) {
            CHECK(base->states == parallel->states);
            CHECK(base->value == parallel->value);
        }
    }
}

TEST_CASE("minimal witness size is monotone in lambda") {
    twtest::Rng rng(1717);
    for (int round = 0; round < 10; ++round) {
        Mdp m = twtest::random_dtmc(rng, 8);
        auto p = heuristic_partition(m);
        Rational full = twtest::initial_value(m, Mode::Max);
        int prev = 0;
        for (int step = 1; step <= 4; ++step) {
            Rational lambda = full * Rational(step) / 4;
            auto res = minimal_witness(m, p, SearchConfig::for_mode(Mode::Max, lambda));
            REQUIRE(res.has_value());
            CHECK(res->size >= prev);
            prev = res->size;
        }
    }
}

TEST_CASE("stored candidate values agree with an independent i_point solve") {
    // Drive the public pieces by hand on the chain: the candidates stored at
    // the root reproduce i_point of their state sets.
    ChainFixture fx;
    auto cfg = SearchConfig::for_mode(Mode::Max, Rational(1, 2));
    auto res = minimal_witness(fx.m, fx.p, cfg);
    REQUIRE(res.has_value());
    auto ip = i_point(fx.m, fx.p, 0, res->states, Mode::Max);
    Rational v(0);
    for (std::size_t i = 0; i < ip.interface.size(); ++i)
        v += fx.m.initial[ip.interface[i]] * ip.coords[i];
    CHECK(v == res->value);
}

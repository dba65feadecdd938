#include "treewit/io.hpp"

#include "doctest.h"
#include "support.hpp"
#include "treewit/error.hpp"

using namespace treewit;

TEST_CASE("a minimal model file round-trips") {
    std::string text = "dtmc\nstates 1\ninitial 0 1\ngoal 0\n";
    Mdp m = parse_model(text);
    CHECK(m.num_states == 1);
    CHECK(m.goal.contains(0));
    CHECK(m.initial[0] == 1);
    CHECK(write_model(m) == text);
    // parse(write(m)) is the identity.
    CHECK(write_model(parse_model(write_model(m))) == write_model(m));
}

TEST_CASE("model parsing is exact and normalizing") {
    std::string text =
        "# exact rationals, comments, odd spacing\n"
        "mdp\n"
        "states 3\n"
        "initial 0 1/3\n"
        "trans 0 a 1 1/3   # forward\n"
        "trans 0 b 2 2/4\n"
        "goal 2\n";
    Mdp m = parse_model(text);
    CHECK(m.initial[0] == Rational(1, 3));
    CHECK(m.actions[0][1].transitions[0].prob == Rational(1, 2));
    std::string canon = write_model(m);
    CHECK(write_model(parse_model(canon)) == canon);
}

TEST_CASE("model errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_model("dtmc\nstates 2\ntrans 0 a 5 1/2\n"),
                         "line 3: state id 5 out of range", Error);
    CHECK_THROWS_WITH_AS(parse_model("dtmc\nstates 2\ntrans 0 a 1 1/0\n"),
                         "line 3: malformed rational '1/0'", Error);
    CHECK_THROWS_WITH_AS(parse_model("dtmc\nstates 2\ntrans 0 a 1 6/5\n"),
                         "line 3: probability outside [0,1]", Error);
    CHECK_THROWS_AS(parse_model("mdp\nstates 2\nbogus 1\n"), Error);
    CHECK_THROWS_AS(parse_model(""), Error);
    // Row-sum violations surface through validate_model, not the parser.
    Mdp m = parse_model("mdp\nstates 2\ntrans 0 a 1 4/5\ntrans 0 a 0 2/5\n");
    CHECK(!validate_model(m).empty());
}

TEST_CASE("dtmc header restricts action labels") {
    CHECK_THROWS_AS(parse_model("dtmc\nstates 2\ntrans 0 a 1 1/4\ntrans 0 b 1 1/4\n"), Error);
    CHECK_NOTHROW(parse_model("mdp\nstates 2\ntrans 0 a 1 1/4\ntrans 0 b 1 1/4\n"));
}

TEST_CASE("partition files round-trip against their model") {
    Mdp m = parse_model(
        "dtmc\nstates 4\ninitial 0 1\n"
        "trans 0 a 1 1/2\ntrans 1 a 2 1/2\ntrans 2 a 3 1/2\ngoal 3\n");
    std::string ptext = "block 0 : 0 1\nblock 1 : 2\nblock 2 : 3\n";
    auto p = parse_partition(ptext, m);
    CHECK(p.width() == 2);
    CHECK(write_partition(p) == ptext);

    CHECK_THROWS_AS(parse_partition("block 0 : 0 1\nblock 1 : 2\n", m), Error);   // missing state
    CHECK_THROWS_AS(parse_partition("block 0 : 0 1 1\nblock 1 : 2 3\n", m), Error);
    CHECK_THROWS_AS(parse_partition("block 0 : 0 1 2 3\nblock 2 : 1\n", m), Error);
}

TEST_CASE("mcp files round-trip") {
    McpInstance inst;
    inst.dimension = 2;
    inst.iota = {Rational(1, 2), Rational(1, 2)};
    inst.final_vec = {Rational(1, 3), Rational(2, 3)};
    inst.lambda = Rational(1, 2);
    Matrix a = {{Rational(1), Rational(0)}, {Rational(1, 7), Rational(1)}};
    Matrix b = {{Rational(0), Rational(1)}, {Rational(1), Rational(0)}};
    inst.pairs.push_back({a, b});
    inst.refresh_nonneg();

    std::string text = write_mcp(inst);
    McpInstance back = parse_mcp(text);
    CHECK(back.dimension == 2);
    CHECK(back.iota == inst.iota);
    CHECK(back.final_vec == inst.final_vec);
    CHECK(back.lambda == inst.lambda);
    CHECK(back.pairs[0][0] == a);
    CHECK(back.pairs[0][1] == b);
    CHECK(write_mcp(back) == text);
}

TEST_CASE("an n=0 mcp file parses") {
    McpInstance inst = parse_mcp("mcp d=2 n=0\niota 1/2 1/2\nfinal 1/2 1/2\nlambda 1/2\n");
    CHECK(inst.n() == 0);
    CHECK(mcp_value(inst, {}) == Rational(1, 2));
}

TEST_CASE("generated mcp instances round-trip") {
    auto inst = partition_to_2mcp({1, 2});
    McpInstance back = parse_mcp(write_mcp(inst));
    CHECK(back.pairs[0][0] == inst.pairs[0][0]);
    CHECK(back.lambda == inst.lambda);
    CHECK(write_mcp(back) == write_mcp(inst));
}

TEST_CASE("malformed mcp entries carry positions") {
    CHECK_THROWS_WITH_AS(parse_mcp("mcp d=2 n=0\niota 1/2 x\nfinal 1/2 1/2\nlambda 1/2\n"),
                         "line 2: malformed rational 'x'", Error);
    CHECK_THROWS_AS(parse_mcp("mcp d=2 n=1\niota 1 0\nfinal 1 0\nlambda 1\npair 1\n1 0\n0 1\n"),
                    Error);  // missing second matrix
}

TEST_CASE("model round-trips on random instances") {
    twtest::Rng rng(2211);
    for (int round = 0; round < 30; ++round) {
        Mdp m = twtest::random_mdp(rng, 10, 2);
        std::string text = write_model(m);
        Mdp back = parse_model(text);
        CHECK(write_model(back) == text);
        CHECK(back.num_states == m.num_states);
        CHECK(reach_values(back, Mode::Max) == reach_values(m, Mode::Max));
    }
}

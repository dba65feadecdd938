#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "treewit/mdp.hpp"
#include "treewit/partition.hpp"
#include "treewit/rational.hpp"
#include "treewit/stateset.hpp"

namespace treewit {

using Matrix = std::vector<std::vector<Rational>>;

Matrix matrix_mul(const Matrix& a, const Matrix& b);
std::vector<Rational> row_times_matrix(const std::vector<Rational>& v, const Matrix& m);
Rational row_times_col(const std::vector<Rational>& a, const std::vector<Rational>& b);

/// d-dimensional matrix-pair chain problem: pick one matrix per pair so that
/// iota * M^1 ... M^n * final meets lambda.
struct McpInstance {
    int dimension = 0;
    std::vector<std::array<Matrix, 2>> pairs;
    std::vector<Rational> iota;       // 1 x d
    std::vector<Rational> final_vec;  // d x 1
    Rational lambda;
    bool nonneg = false;

    int n() const { return static_cast<int>(pairs.size()); }
    void refresh_nonneg();
};

/// Instance whose entries all lie in [1/12 - eps, 1/12] with
/// 0 < 12 eps < 1/3 (1/12 - eps)^(n+2).
struct ConditionedMcp {
    McpInstance instance;
    Rational epsilon;
};

std::vector<std::string> validate_mcp(const McpInstance& inst);
std::vector<std::string> validate_conditioned(const ConditionedMcp& c);

Rational mcp_value(const McpInstance& inst, const std::vector<int>& sigma);

struct McpBruteResult {
    std::vector<int> best_sigma;
    Rational best_value;
    bool satisfied = false;
};

/// Enumerates all 2^n choices (ties: lexicographically smallest sigma).
/// Refuses n over the cap.
McpBruteResult mcp_brute(const McpInstance& inst, int threads = 1, int cap = 24);

/// [[1-t^2, -2t], [2t, 1-t^2]] / (1+t^2): exactly orthogonal, determinant 1,
/// rotates by 2*arctan(t).
Matrix rational_rotation(const Rational& t);

struct ApproxRotation {
    Matrix matrix;
    Rational angle_error_bound;  // radians, certified
};

/// Rational rotation within `epsilon` radians of target_half_turns * pi,
/// found by binary tan-half-angle subdivision with certified interval
/// checks. Supports |target_half_turns| <= 3/4.
ApproxRotation approx_rotation(const Rational& target_half_turns, const Rational& epsilon);

/// Partition-problem reduction: pair j holds the two approximate rotations
/// by +/- u*s_j with u = pi / (2 (sum |s_i| + 1)); iota = final = (1/2,1/2);
/// lambda separates the certified yes/no value gap.
McpInstance partition_to_2mcp(const std::vector<long long>& ints);

/// True iff some signing of the integers sums to zero (the partition
/// problem). Independent dynamic-programming oracle.
bool subset_sum_partition(const std::vector<long long>& ints);

/// Basis-change embedding into nonnegative 3x3 matrices; kappa is the
/// smallest power of two making every entry nonnegative, and
/// iota' N^1 ... N^n final' = iota M^1 ... M^n final + kappa^(n+2) exactly.
McpInstance lift_to_nonneg_3mcp(const McpInstance& two_d);
McpInstance lift_to_nonneg_3mcp(const McpInstance& two_d, const Rational& kappa);

/// Uniform rescaling into [1/12 - eps, 1/12] with eps the largest power of
/// two satisfying the conditioning inequality; re-lifts with doubled kappa
/// until feasible. Yes/no status is preserved exactly.
ConditionedMcp condition_entries(const McpInstance& lifted);

enum class ChainVariant { Plain, Robust };
enum class GadgetSide { Left, Right, Final, Goal };

/// Layered DTMC realizing the conditioned instance: choosing the left or
/// right triple per layer reproduces the matrix chain value as the
/// reachability probability. The robust variant adds probability-gamma
/// cycles inside each triple so equal-size non-conforming subsystems are
/// never better than conforming ones.
struct GadgetChain {
    Mdp dtmc;
    DirectedTreePartition partition;
    std::vector<int> layer_index;  // 1..n layers, n+1 final, n+2 goal
    std::vector<GadgetSide> side;
    int n = 0;
    Rational lambda;
    std::optional<Rational> gamma;  // set for the robust variant
};

GadgetChain mcp_to_chain(const ConditionedMcp& cond, ChainVariant variant);

/// Conforming subsystem for the choice word sigma: the final triple, the
/// goal, and one of left_i / right_i per layer; exactly 3n + 4 states.
StateSet good_subsystem(const GadgetChain& chain, const std::vector<int>& sigma);

/// Exact reachability value of the subsystem induced by `states`, computed
/// layer by layer (fast path for exhaustive subset sweeps; agrees with
/// reach_values on the induced subsystem).
Rational chain_subsystem_value(const GadgetChain& chain, const StateSet& states);

/// Seeded benchmark family: a path partition of the given width with the
/// goal in the last block; bit-identical for equal seeds.
std::pair<Mdp, DirectedTreePartition> layered_random(int layers, int width, int fanout,
                                                     std::uint64_t seed);

}  // namespace treewit

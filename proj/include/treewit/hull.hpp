#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "treewit/rational.hpp"

namespace treewit {

/// Vector of exact reachability values over an ordered list of interface
/// states. All coordinates lie in [0,1].
struct IPoint {
    std::vector<int> interface;  // sorted state ids
    std::vector<Rational> coords;

    bool operator==(const IPoint& o) const {
        return interface == o.interface && coords == o.coords;
    }
};

/// -1 / 0 / +1 lexicographic comparison of coordinate vectors.
int coords_compare(const std::vector<Rational>& a, const std::vector<Rational>& b);

/// Exact convex-combination membership. Returns the weights (one per input
/// point, same order) when p lies in the hull, std::nullopt otherwise.
/// Decided by an exact rational phase-1 simplex.
std::optional<std::vector<Rational>> in_convex_hull(const IPoint& p,
                                                    const std::vector<IPoint>& pts);

/// Indices of the points that are not convex combinations of the others.
/// Exact duplicates keep the first occurrence only.
std::vector<int> extreme_points(const std::vector<IPoint>& pts);

/// All axis projections { pi(p, D) | D subseteq I }, duplicates collapsed,
/// sorted. Refuses interfaces larger than `cap` (the result is 2^|I|).
std::vector<IPoint> project_all(const IPoint& p, int cap = 10);

/// Pointwise p <= q.
bool pareto_leq(const IPoint& p, const IPoint& q);

/// Incremental store of points supporting extreme-point queries: after any
/// sequence of insertions, vertices() holds exactly the extreme points of
/// the convex hull of everything inserted so far.
class ExtremeSet {
  public:
    explicit ExtremeSet(std::vector<int> interface) : interface_(std::move(interface)) {}

    void insert(const std::vector<IPoint>& pts);
    std::vector<IPoint> vertices() const;
    bool is_vertex(const std::vector<Rational>& coords) const;
    std::size_t vertex_count() const { return vertex_coords_.size(); }

  private:
    std::vector<int> interface_;
    std::vector<std::vector<Rational>> vertex_coords_;  // sorted lex
};

/// Number of exact LP feasibility solves performed so far (process-wide).
std::uint64_t hull_lp_calls();
void reset_hull_lp_calls();

namespace detail {

/// p in conv(pts)? Certificate weights on success. Operates on raw
/// coordinate vectors of equal dimension.
std::optional<std::vector<Rational>> convex_combination(
    const std::vector<Rational>& p, const std::vector<const std::vector<Rational>*>& pts);

}  // namespace detail

}  // namespace treewit

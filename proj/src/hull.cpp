#include "treewit/hull.hpp"

#include <algorithm>
#include <atomic>

#include "treewit/error.hpp"

namespace treewit {

namespace {

std::atomic<std::uint64_t> g_lp_calls{0};

void require_shared_interface(const IPoint& p, const std::vector<IPoint>& pts) {
    for (const auto& q : pts) {
        if (q.interface != p.interface || q.coords.size() != p.coords.size())
            throw Error("hull: points do not share one interface");
    }
    if (p.interface.size() != p.coords.size())
        throw Error("hull: interface/coordinate dimension mismatch");
}

}  // namespace

int coords_compare(const std::vector<Rational>& a, const std::vector<Rational>& b) {
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        int c = cmp(a[i], b[i]);
        if (c != 0) return c;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return 0;
}

namespace detail {

std::optional<std::vector<Rational>> convex_combination(
    const std::vector<Rational>& p, const std::vector<const std::vector<Rational>*>& pts) {
    g_lp_calls.fetch_add(1, std::memory_order_relaxed);
    const int d = static_cast<int>(p.size());
    const int m = static_cast<int>(pts.size());
    if (m == 0) return std::nullopt;

    // Phase-1 simplex on: sum_i l_i * pts_i = p, sum_i l_i = 1, l >= 0.
    // Rows: d coordinate constraints plus the weight-sum row; one artificial
    // variable per row; Bland's rule guarantees termination.
    const int rows = d + 1;
    const int cols = m + rows + 1;  // original vars, artificials, rhs
    std::vector<std::vector<Rational>> t(rows, std::vector<Rational>(cols, Rational(0)));
    for (int r = 0; r < d; ++r) {
        for (int j = 0; j < m; ++j) t[r][j] = (*pts[j])[r];
        t[r][cols - 1] = p[r];
    }
    for (int j = 0; j < m; ++j) t[d][j] = 1;
    t[d][cols - 1] = 1;
    for (int r = 0; r < rows; ++r) {
        if (t[r][cols - 1] < 0)
            for (int j = 0; j < cols; ++j) t[r][j] = -t[r][j];
        t[r][m + r] = 1;
    }
    std::vector<int> basis(rows);
    for (int r = 0; r < rows; ++r) basis[r] = m + r;

    // Reduced costs for minimizing the sum of artificials.
    std::vector<Rational> z(cols, Rational(0));
    for (int j = 0; j < cols; ++j)
        for (int r = 0; r < rows; ++r) z[j] -= t[r][j];
    for (int r = 0; r < rows; ++r) z[m + r] += 1;
    Rational obj(0);
    for (int r = 0; r < rows; ++r) obj += t[r][cols - 1];

    while (obj != 0) {
        int enter = -1;
        for (int j = 0; j < cols - 1; ++j) {
            if (z[j] < 0) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;  // optimal and positive: infeasible
        int leave = -1;
        Rational best_ratio(0);
        for (int r = 0; r < rows; ++r) {
            if (t[r][enter] <= 0) continue;
            Rational ratio = t[r][cols - 1] / t[r][enter];
            if (leave < 0 || ratio < best_ratio ||
                (ratio == best_ratio && basis[r] < basis[leave])) {
                leave = r;
                best_ratio = ratio;
            }
        }
        if (leave < 0) throw Error("internal: unbounded phase-1 simplex");
        Rational piv = t[leave][enter];
        for (int j = 0; j < cols; ++j) t[leave][j] /= piv;
        for (int r = 0; r < rows; ++r) {
            if (r == leave || t[r][enter] == 0) continue;
            Rational f = t[r][enter];
            for (int j = 0; j < cols; ++j) t[r][j] -= f * t[leave][j];
        }
        Rational fz = z[enter];
        if (fz != 0)
            for (int j = 0; j < cols; ++j) z[j] -= fz * t[leave][j];
        basis[leave] = enter;
        obj = 0;
        for (int r = 0; r < rows; ++r)
            if (basis[r] >= m) obj += t[r][cols - 1];
    }
    if (obj != 0) return std::nullopt;
    std::vector<Rational> weights(m, Rational(0));
    for (int r = 0; r < rows; ++r)
        if (basis[r] < m) weights[basis[r]] = t[r][cols - 1];
    return weights;
}

}  // namespace detail

std::optional<std::vector<Rational>> in_convex_hull(const IPoint& p,
                                                    const std::vector<IPoint>& pts) {
    require_shared_interface(p, pts);
    std::vector<const std::vector<Rational>*> raw;
    raw.reserve(pts.size());
    for (const auto& q : pts) raw.push_back(&q.coords);
    return detail::convex_combination(p.coords, raw);
}

namespace {

/// Extreme filter over distinct coordinate vectors; removal-as-you-go is
/// sound because dropping an interior point leaves the hull unchanged.
std::vector<char> extreme_filter(const std::vector<std::vector<Rational>>& vals) {
    const int n = static_cast<int>(vals.size());
    std::vector<char> alive(n, 1);
    if (n <= 1) return alive;
    const int d = static_cast<int>(vals[0].size());

    // Supporting-functional shortcut: a point strictly extremal in some
    // coordinate or in the coordinate sum is a vertex, no LP needed.
    std::vector<char> certain(n, 0);
    for (int c = 0; c <= d; ++c) {
        int lo = 0, hi = 0;
        bool lo_tie = false, hi_tie = false;
        auto key = [&](int i) {
            if (c < d) return vals[i][c];
            Rational s(0);
            for (const auto& x : vals[i]) s += x;
            return s;
        };
        Rational lo_val = key(0), hi_val = lo_val;
        for (int i = 1; i < n; ++i) {
            Rational v = key(i);
            if (v < lo_val) {
                lo_val = v;
                lo = i;
                lo_tie = false;
            } else if (v == lo_val) {
                lo_tie = true;
            }
            if (v > hi_val) {
                hi_val = v;
                hi = i;
                hi_tie = false;
            } else if (v == hi_val) {
                hi_tie = true;
            }
        }
        if (!lo_tie) certain[lo] = 1;
        if (!hi_tie) certain[hi] = 1;
    }

    for (int i = 0; i < n; ++i) {
        if (certain[i]) continue;
        std::vector<const std::vector<Rational>*> others;
        others.reserve(n - 1);
        for (int j = 0; j < n; ++j)
            if (j != i && alive[j]) others.push_back(&vals[j]);
        if (detail::convex_combination(vals[i], others)) alive[i] = 0;
    }
    return alive;
}

}  // namespace

std::vector<int> extreme_points(const std::vector<IPoint>& pts) {
    if (pts.empty()) return {};
    require_shared_interface(pts.front(), pts);
    std::vector<std::vector<Rational>> distinct;
    std::vector<int> first_index;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool seen = false;
        for (const auto& v : distinct) {
            if (coords_compare(v, pts[i].coords) == 0) {
                seen = true;
                break;
            }
        }
        if (!seen) {
            distinct.push_back(pts[i].coords);
            first_index.push_back(static_cast<int>(i));
        }
    }
    auto alive = extreme_filter(distinct);
    std::vector<int> out;
    for (std::size_t i = 0; i < distinct.size(); ++i)
        if (alive[i]) out.push_back(first_index[i]);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<IPoint> project_all(const IPoint& p, int cap) {
    const int d = static_cast<int>(p.coords.size());
    if (d > cap)
        throw Error("project_all: interface of size " + std::to_string(d) +
                    " exceeds the cap of " + std::to_string(cap));
    std::vector<std::vector<Rational>> coords;
    coords.reserve(std::size_t{1} << d);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
        std::vector<Rational> c(d, Rational(0));
        for (int i = 0; i < d; ++i)
            if ((mask >> i) & 1) c[i] = p.coords[i];
        coords.push_back(std::move(c));
    }
    std::sort(coords.begin(), coords.end(),
              [](const auto& a, const auto& b) { return coords_compare(a, b) < 0; });
    coords.erase(std::unique(coords.begin(), coords.end(),
                             [](const auto& a, const auto& b) { return coords_compare(a, b) == 0; }),
                 coords.end());
    std::vector<IPoint> out;
    out.reserve(coords.size());
    for (auto& c : coords) out.push_back(IPoint{p.interface, std::move(c)});
    return out;
}

bool pareto_leq(const IPoint& p, const IPoint& q) {
    if (p.interface != q.interface) throw Error("pareto_leq: interface mismatch");
    for (std::size_t i = 0; i < p.coords.size(); ++i)
        if (p.coords[i] > q.coords[i]) return false;
    return true;
}

void ExtremeSet::insert(const std::vector<IPoint>& pts) {
    std::vector<std::vector<Rational>> pool = vertex_coords_;
    for (const auto& p : pts) {
        if (p.interface != interface_) throw Error("ExtremeSet: interface mismatch");
        pool.push_back(p.coords);
    }
    std::sort(pool.begin(), pool.end(),
              [](const auto& a, const auto& b) { return coords_compare(a, b) < 0; });
    pool.erase(std::unique(pool.begin(), pool.end(),
                           [](const auto& a, const auto& b) { return coords_compare(a, b) == 0; }),
               pool.end());
    auto alive = extreme_filter(pool);
    vertex_coords_.clear();
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (alive[i]) vertex_coords_.push_back(std::move(pool[i]));
}

std::vector<IPoint> ExtremeSet::vertices() const {
    std::vector<IPoint> out;
    out.reserve(vertex_coords_.size());
    for (const auto& c : vertex_coords_) out.push_back(IPoint{interface_, c});
    return out;
}

bool ExtremeSet::is_vertex(const std::vector<Rational>& coords) const {
    auto it = std::lower_bound(
        vertex_coords_.begin(), vertex_coords_.end(), coords,
        [](const auto& a, const auto& b) { return coords_compare(a, b) < 0; });
    return it != vertex_coords_.end() && coords_compare(*it, coords) == 0;
}

std::uint64_t hull_lp_calls() { return g_lp_calls.load(std::memory_order_relaxed); }
void reset_hull_lp_calls() { g_lp_calls.store(0, std::memory_order_relaxed); }

}  // namespace treewit

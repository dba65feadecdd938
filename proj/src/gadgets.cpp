#include "treewit/gadgets.hpp"

#include <algorithm>
#include <random>

#include "treewit/error.hpp"
#include "treewit/parallel.hpp"

namespace treewit {

namespace {

// Rational brackets of pi, 20 decimal digits.
const Rational& pi_lo() {
    static const Rational v = [] {
        Rational r(mpz_class("314159265358979323846"), mpz_class("100000000000000000000"));
        r.canonicalize();
        return r;
    }();
    return v;
}
const Rational& pi_hi() {
    static const Rational v = [] {
        Rational r(mpz_class("314159265358979323847"), mpz_class("100000000000000000000"));
        r.canonicalize();
        return r;
    }();
    return v;
}

struct Interval {
    Rational lo, hi;
};

/// Alternating-series enclosure of cos(x) for |x| <= 3.2.
Interval cos_interval(const Rational& x) {
    Rational xx = x * x;
    if (xx > Rational(256, 25)) throw Error("cos_interval: argument out of range");
    const int terms = 25;
    Rational sum(0), term(1);
    for (int k = 0; k < terms; ++k) {
        sum += (k % 2 == 0) ? term : -term;
        term *= xx;
        term /= (2 * k + 1) * (2 * k + 2);
    }
    // `term` now holds the magnitude of the first omitted term; terms are
    // decreasing from index one on, so the usual bracket applies.
    if (terms % 2 == 0) return {sum, sum + term};
    return {sum - term, sum};
}

/// Smallest-denominator dyadic strictly inside (lo, hi).
Rational dyadic_between(const Rational& lo, const Rational& hi) {
    if (!(lo < hi)) throw Error("internal: empty interval for dyadic_between");
    Rational denom(1);
    for (int k = 0; k <= 4096; ++k) {
        Rational scaled = lo * denom;
        mpz_class fl;
        mpz_fdiv_q(fl.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
        mpz_class next = fl + 1;
        Rational candidate = Rational(next) / denom;
        if (candidate < hi) return candidate;
        denom *= 2;
    }
    throw Error("internal: dyadic_between failed to converge");
}

Matrix identity(int d) {
    Matrix m(d, std::vector<Rational>(d, Rational(0)));
    for (int i = 0; i < d; ++i) m[i][i] = 1;
    return m;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a[0].size(), std::vector<Rational>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
    return t;
}

}  // namespace

Matrix matrix_mul(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.size(), k = b.size(), m = b[0].size();
    Matrix c(n, std::vector<Rational>(m, Rational(0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < k; ++l) {
            if (a[i][l] == 0) continue;
            for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
        }
    return c;
}

std::vector<Rational> row_times_matrix(const std::vector<Rational>& v, const Matrix& m) {
    std::vector<Rational> out(m[0].size(), Rational(0));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == 0) continue;
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[i] * m[i][j];
    }
    return out;
}

Rational row_times_col(const std::vector<Rational>& a, const std::vector<Rational>& b) {
    Rational s(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void McpInstance::refresh_nonneg() {
    nonneg = true;
    auto check = [&](const Rational& r) {
        if (r < 0) nonneg = false;
    };
    for (const auto& p : pairs)
        for (const auto& m : p)
            for (const auto& row : m)
                for (const auto& e : row) check(e);
    for (const auto& e : iota) check(e);
    for (const auto& e : final_vec) check(e);
}

std::vector<std::string> validate_mcp(const McpInstance& inst) {
    std::vector<std::string> out;
    const int d = inst.dimension;
    if (d <= 0) out.push_back("dimension must be positive");
    auto check_mat = [&](const Matrix& m, const std::string& what) {
        if (static_cast<int>(m.size()) != d) out.push_back(what + ": wrong row count");
        for (const auto& row : m)
            if (static_cast<int>(row.size()) != d) out.push_back(what + ": wrong column count");
    };
    for (int j = 0; j < inst.n(); ++j) {
        check_mat(inst.pairs[j][0], "pair " + std::to_string(j + 1) + " m0");
        check_mat(inst.pairs[j][1], "pair " + std::to_string(j + 1) + " m1");
    }
    if (static_cast<int>(inst.iota.size()) != d) out.push_back("iota has wrong length");
    if (static_cast<int>(inst.final_vec.size()) != d) out.push_back("final has wrong length");
    McpInstance copy = inst;
    copy.refresh_nonneg();
    if (inst.nonneg && !copy.nonneg) out.push_back("nonneg flag set but entries are negative");
    return out;
}

std::vector<std::string> validate_conditioned(const ConditionedMcp& c) {
    std::vector<std::string> out = validate_mcp(c.instance);
    const Rational lo = Rational(1, 12) - c.epsilon;
    const Rational hi(1, 12);
    auto check = [&](const Rational& r, const std::string& what) {
        if (r < lo || r > hi) out.push_back(what + " entry " + to_string(r) + " outside range");
    };
    for (int j = 0; j < c.instance.n(); ++j)
        for (int i = 0; i < 2; ++i)
            for (const auto& row : c.instance.pairs[j][i])
                for (const auto& e : row) check(e, "pair " + std::to_string(j + 1));
    for (const auto& e : c.instance.iota) check(e, "iota");
    for (const auto& e : c.instance.final_vec) check(e, "final");
    const int n = c.instance.n();
    Rational rhs = rational_pow(lo, n + 2) / 3;
    if (!(c.epsilon > 0 && 12 * c.epsilon < rhs))
        out.push_back("conditioning inequality violated for epsilon " + to_string(c.epsilon));
    return out;
}

Rational mcp_value(const McpInstance& inst, const std::vector<int>& sigma) {
    if (static_cast<int>(sigma.size()) != inst.n())
        throw Error("mcp_value: sigma length differs from the pair count");
    std::vector<Rational> row = inst.iota;
    for (int j = 0; j < inst.n(); ++j) {
        int pick = sigma[j];
        if (pick != 0 && pick != 1) throw Error("mcp_value: sigma entries must be 0/1");
        row = row_times_matrix(row, inst.pairs[j][pick]);
    }
    return row_times_col(row, inst.final_vec);
}

McpBruteResult mcp_brute(const McpInstance& inst, int threads, int cap) {
    const int n = inst.n();
    if (n > cap)
        throw Error("mcp_brute: " + std::to_string(n) + " pairs exceed the cap of " +
                    std::to_string(cap));
    const std::uint64_t total = std::uint64_t{1} << n;
    const int workers = std::max(1, threads);
    std::vector<std::optional<std::pair<Rational, std::uint64_t>>> best(workers);
    parallel_for(workers, workers, [&](std::size_t w) {
        std::optional<std::pair<Rational, std::uint64_t>> local;
        for (std::uint64_t mask = w; mask < total; mask += workers) {
            std::vector<int> sigma(n);
            for (int j = 0; j < n; ++j) sigma[j] = (mask >> (n - 1 - j)) & 1;
            Rational v = mcp_value(inst, sigma);
            if (!local || v > local->first || (v == local->first && mask < local->second))
                local = {v, mask};
        }
        best[w] = local;
    });
    McpBruteResult res;
    std::optional<std::pair<Rational, std::uint64_t>> top;
    for (const auto& b : best) {
        if (!b) continue;
        if (!top || b->first > top->first || (b->first == top->first && b->second < top->second))
            top = b;
    }
    if (!top) {  // n == 0: the empty product
        res.best_sigma = {};
        res.best_value = row_times_col(inst.iota, inst.final_vec);
    } else {
        res.best_value = top->first;
        res.best_sigma.resize(n);
        for (int j = 0; j < n; ++j) res.best_sigma[j] = (top->second >> (n - 1 - j)) & 1;
    }
    res.satisfied = res.best_value >= inst.lambda;
    return res;
}

Matrix rational_rotation(const Rational& t) {
    Rational denom = 1 + t * t;
    Rational c = (1 - t * t) / denom;
    Rational s = (2 * t) / denom;
    return {{c, -s}, {s, c}};
}

namespace {

/// Certified check that the rotation realized by t lies within eps radians
/// of target_half_turns * pi (all quantities nonnegative here).
bool rotation_within(const Rational& t, const Rational& half_turns, const Rational& eps) {
    Rational z = (1 - t * t) / (1 + t * t);  // cos of the realized angle
    Rational lo_arg = half_turns * pi_hi() - eps;
    if (lo_arg > 0) {
        Interval c1 = cos_interval(lo_arg);
        if (!(z <= c1.lo)) return false;  // certify angle >= target - eps
    }
    Rational hi_arg = half_turns * pi_lo() + eps;
    Interval c2 = cos_interval(hi_arg);
    return z >= c2.hi;  // certify angle <= target + eps
}

}  // namespace

ApproxRotation approx_rotation(const Rational& target_half_turns, const Rational& epsilon) {
    if (epsilon <= 0) throw Error("approx_rotation: precision must be positive");
    Rational r = target_half_turns;
    bool flip = r < 0;
    if (flip) r = -r;
    if (r > Rational(3, 4)) throw Error("approx_rotation: target beyond 3/4 half-turns");
    if (r == 0) return {identity(2), Rational(0)};

    Rational lo(0), hi(8);
    Rational mid_target = (cos_interval(r * pi_lo()).hi + cos_interval(r * pi_hi()).lo) / 2;
    for (int iter = 0; iter < 400; ++iter) {
        Rational t = (lo + hi) / 2;
        if (rotation_within(t, r, epsilon)) {
            Matrix m = rational_rotation(flip ? Rational(-t) : t);
            return {m, epsilon};
        }
        Rational z = (1 - t * t) / (1 + t * t);
        if (z > mid_target)
            lo = t;  // realized angle too small
        else
            hi = t;
    }
    throw Error("internal: approx_rotation did not converge");
}

bool subset_sum_partition(const std::vector<long long>& ints) {
    // Reachable signed sums, offset by the total magnitude.
    long long total = 0;
    for (long long v : ints) total += std::llabs(v);
    std::vector<char> reach(2 * total + 1, 0);
    reach[total] = 1;
    for (long long v : ints) {
        std::vector<char> next(2 * total + 1, 0);
        long long a = std::llabs(v);
        for (long long i = 0; i <= 2 * total; ++i) {
            if (!reach[i]) continue;
            if (i + a <= 2 * total) next[i + a] = 1;
            if (i - a >= 0) next[i - a] = 1;
        }
        reach = std::move(next);
    }
    return reach[total];
}

McpInstance partition_to_2mcp(const std::vector<long long>& ints) {
    if (ints.empty()) throw Error("partition_to_2mcp: empty integer list");
    long long sum_abs = 0;
    for (long long v : ints) sum_abs += std::llabs(v);
    if (sum_abs == 0) throw Error("partition_to_2mcp: all integers are zero");
    const long K = static_cast<long>(sum_abs) + 1;
    const int n = static_cast<int>(ints.size());

    const Rational u_lo = pi_lo() / (2 * K);
    const Rational u_hi = pi_hi() / (2 * K);
    const Rational eps_each = u_lo / (4 * n);

    McpInstance inst;
    inst.dimension = 2;
    Rational delta(0);
    for (long long v : ints) {
        Rational r = Rational(static_cast<long>(std::llabs(v))) / Rational(static_cast<long>(2 * K));
        auto rot = approx_rotation(r, eps_each);
        delta += rot.angle_error_bound;
        Matrix plus = v >= 0 ? rot.matrix : transpose(rot.matrix);
        inst.pairs.push_back({transpose(plus), plus});  // (clockwise, counter-clockwise)
    }
    inst.iota = {Rational(1, 2), Rational(1, 2)};
    inst.final_vec = {Rational(1, 2), Rational(1, 2)};

    // Certified value gap: a zero signed sum keeps the total angle within
    // delta, a nonzero one forces magnitude >= u - delta (and below pi).
    if (!(delta * 4 <= u_lo)) throw Error("internal: rotation error budget exceeded");
    Rational max_angle = Rational(static_cast<long>(sum_abs)) * u_hi + delta;
    if (!(max_angle < pi_lo())) throw Error("internal: total angle range too wide");
    Rational yes_lo = cos_interval(delta).lo / 2;
    Rational no_hi = cos_interval(u_lo - delta).hi / 2;
    if (!(no_hi < yes_lo)) throw Error("internal: yes/no gap collapsed");
    inst.lambda = dyadic_between(no_hi, yes_lo);
    inst.refresh_nonneg();
    return inst;
}

namespace {

const Matrix& basis_b() {
    static const Matrix b = {{Rational(1), Rational(1), Rational(1)},
                             {Rational(-1), Rational(1), Rational(1)},
                             {Rational(0), Rational(-2), Rational(1)}};
    return b;
}

const Matrix& basis_b_inv() {
    static const Matrix b = {{Rational(1, 2), Rational(-1, 2), Rational(0)},
                             {Rational(1, 6), Rational(1, 6), Rational(-1, 3)},
                             {Rational(1, 3), Rational(1, 3), Rational(1, 3)}};
    return b;
}

}  // namespace

McpInstance lift_to_nonneg_3mcp(const McpInstance& two_d, const Rational& kappa) {
    if (two_d.dimension != 2) throw Error("lift_to_nonneg_3mcp: input must be 2-dimensional");
    McpInstance out;
    out.dimension = 3;
    for (const auto& pair : two_d.pairs) {
        std::array<Matrix, 2> lifted;
        for (int i = 0; i < 2; ++i) {
            Matrix diag = identity(3);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) diag[r][c] = pair[i][r][c];
            diag[2][2] = kappa;
            diag[0][2] = diag[1][2] = diag[2][0] = diag[2][1] = 0;
            lifted[i] = matrix_mul(matrix_mul(basis_b(), diag), basis_b_inv());
        }
        out.pairs.push_back(std::move(lifted));
    }
    std::vector<Rational> iota3 = {two_d.iota[0], two_d.iota[1], kappa};
    out.iota = row_times_matrix(iota3, basis_b_inv());
    Matrix fcol = {{two_d.final_vec[0]}, {two_d.final_vec[1]}, {kappa}};
    Matrix f3 = matrix_mul(basis_b(), fcol);
    out.final_vec = {f3[0][0], f3[1][0], f3[2][0]};
    out.lambda = two_d.lambda + rational_pow(kappa, two_d.n() + 2);
    out.refresh_nonneg();
    return out;
}

McpInstance lift_to_nonneg_3mcp(const McpInstance& two_d) {
    Rational kappa(1, 1 << 16);
    for (int i = 0; i < 300; ++i) {
        McpInstance lifted = lift_to_nonneg_3mcp(two_d, kappa);
        if (lifted.nonneg) return lifted;
        kappa *= 2;
    }
    throw Error("lift_to_nonneg_3mcp: no nonnegative lift within the kappa budget");
}

namespace {

struct RecoveredLift {
    McpInstance two_d;
    Rational kappa;
};

/// Undoes the basis change; errors if the input was not produced by the
/// lifting construction.
RecoveredLift recover_lift(const McpInstance& lifted) {
    if (lifted.dimension != 3) throw Error("condition_entries: input must be 3-dimensional");
    RecoveredLift rec;
    rec.two_d.dimension = 2;
    std::optional<Rational> kappa;
    for (const auto& pair : lifted.pairs) {
        std::array<Matrix, 2> ms;
        for (int i = 0; i < 2; ++i) {
            Matrix d = matrix_mul(matrix_mul(basis_b_inv(), pair[i]), basis_b());
            if (d[0][2] != 0 || d[1][2] != 0 || d[2][0] != 0 || d[2][1] != 0)
                throw Error("condition_entries: input is not a basis-change lift");
            if (kappa && *kappa != d[2][2])
                throw Error("condition_entries: inconsistent lift scales");
            kappa = d[2][2];
            ms[i] = {{d[0][0], d[0][1]}, {d[1][0], d[1][1]}};
        }
        rec.two_d.pairs.push_back(std::move(ms));
    }
    std::vector<Rational> iota3 = row_times_matrix(lifted.iota, basis_b());
    Matrix fcol = {{lifted.final_vec[0]}, {lifted.final_vec[1]}, {lifted.final_vec[2]}};
    Matrix f2 = matrix_mul(basis_b_inv(), fcol);
    if (!kappa) kappa = iota3[2];
    if (iota3[2] != *kappa || f2[2][0] != *kappa)
        throw Error("condition_entries: inconsistent lift scales");
    rec.two_d.iota = {iota3[0], iota3[1]};
    rec.two_d.final_vec = {f2[0][0], f2[1][0]};
    rec.two_d.lambda = lifted.lambda - rational_pow(*kappa, lifted.n() + 2);
    rec.kappa = *kappa;
    rec.two_d.refresh_nonneg();
    return rec;
}

}  // namespace

ConditionedMcp condition_entries(const McpInstance& lifted_in) {
    if (!lifted_in.nonneg) throw Error("condition_entries: instance is not nonnegative");
    RecoveredLift rec = recover_lift(lifted_in);
    const int n = lifted_in.n();

    // Largest power-of-two epsilon satisfying 0 < 12 eps < 1/3 (1/12-eps)^(n+2).
    Rational eps(1, 2);
    while (true) {
        if (eps < Rational(1, 12) && 12 * eps < rational_pow(Rational(1, 12) - eps, n + 2) / 3)
            break;
        eps /= 2;
        mpz_class huge = mpz_class(1) << 512;
        if (eps < Rational(mpz_class(1), huge)) throw Error("internal: no feasible epsilon found");
    }

    // A single global scale cannot reach the band: the lifted final vector's
    // entries grow like kappa while matrix entries grow like kappa/3. Each
    // object is scaled separately instead; the chain value picks up the
    // product of the scales, so the yes/no status is untouched.
    Rational kappa = rec.kappa;
    McpInstance lifted = lifted_in;
    for (int iter = 0; iter < 300; ++iter) {
        struct Extent {
            std::optional<Rational> min_e, max_e;
            void scan(const Rational& r) {
                if (!min_e || r < *min_e) min_e = r;
                if (!max_e || r > *max_e) max_e = r;
            }
            bool in_band(const Rational& eps) const {
                return *min_e > 0 && *min_e >= (1 - 12 * eps) * *max_e;
            }
            Rational scale() const { return Rational(1, 12) / *max_e; }
        };
        std::vector<Extent> per_pair(lifted.pairs.size());
        Extent iota_e, final_e;
        for (std::size_t j = 0; j < lifted.pairs.size(); ++j)
            for (const auto& m : lifted.pairs[j])
                for (const auto& row : m)
                    for (const auto& e : row) per_pair[j].scan(e);
        for (const auto& e : lifted.iota) iota_e.scan(e);
        for (const auto& e : lifted.final_vec) final_e.scan(e);

        bool feasible = lifted.nonneg && iota_e.in_band(eps) && final_e.in_band(eps);
        for (const auto& ex : per_pair) feasible = feasible && ex.in_band(eps);
        if (feasible) {
            ConditionedMcp out;
            out.epsilon = eps;
            out.instance.dimension = 3;
            Rational total_scale = iota_e.scale() * final_e.scale();
            for (std::size_t j = 0; j < lifted.pairs.size(); ++j) {
                Rational alpha = per_pair[j].scale();
                total_scale *= alpha;
                std::array<Matrix, 2> scaled;
                for (int i = 0; i < 2; ++i) {
                    scaled[i] = lifted.pairs[j][i];
                    for (auto& row : scaled[i])
                        for (auto& e : row) e *= alpha;
                }
                out.instance.pairs.push_back(std::move(scaled));
            }
            out.instance.iota = lifted.iota;
            for (auto& e : out.instance.iota) e *= iota_e.scale();
            out.instance.final_vec = lifted.final_vec;
            for (auto& e : out.instance.final_vec) e *= final_e.scale();
            out.instance.lambda = lifted.lambda * total_scale;
            out.instance.refresh_nonneg();
            auto errs = validate_conditioned(out);
            if (!errs.empty()) throw Error("internal: conditioning failed: " + errs.front());
            return out;
        }
        kappa *= 2;
        lifted = lift_to_nonneg_3mcp(rec.two_d, kappa);
    }
    throw Error("condition_entries: entry band infeasible within the kappa budget (kappa " +
                to_string(kappa) + ")");
}

namespace {

int chain_state_count(int n) { return 6 * n + 4; }

}  // namespace

GadgetChain mcp_to_chain(const ConditionedMcp& cond, ChainVariant variant) {
    auto errs = validate_conditioned(cond);
    if (!errs.empty()) throw Error("mcp_to_chain: " + errs.front());
    if (cond.instance.dimension != 3) throw Error("mcp_to_chain: instance must be 3-dimensional");

    const int n = cond.instance.n();
    const int total = chain_state_count(n);
    const int final_base = 6 * n;
    const int goal_state = final_base + 3;

    GadgetChain chain;
    chain.n = n;
    chain.lambda = cond.instance.lambda;
    chain.dtmc = Mdp(total);
    chain.layer_index.assign(total, 0);
    chain.side.assign(total, GadgetSide::Goal);

    Rational gamma(0);
    if (variant == ChainVariant::Robust) {
        const Rational lo = 12 * cond.epsilon;
        const Rational hi =
            rational_pow(3 * (Rational(1, 12) - cond.epsilon), n + 2) / 3;
        if (!(lo < hi)) throw Error("internal: empty gamma interval");
        gamma = 1 - dyadic_between(lo, hi);
        chain.gamma = gamma;
    }

    auto l_state = [&](int layer, int w) { return 6 * (layer - 1) + w; };
    auto r_state = [&](int layer, int w) { return 6 * (layer - 1) + 3 + w; };
    auto final_state = [&](int w) { return final_base + w; };

    for (int layer = 1; layer <= n; ++layer) {
        for (int w = 0; w < 3; ++w) {
            chain.layer_index[l_state(layer, w)] = layer;
            chain.layer_index[r_state(layer, w)] = layer;
            chain.side[l_state(layer, w)] = GadgetSide::Left;
            chain.side[r_state(layer, w)] = GadgetSide::Right;
        }
    }
    for (int w = 0; w < 3; ++w) {
        chain.layer_index[final_state(w)] = n + 1;
        chain.side[final_state(w)] = GadgetSide::Final;
    }
    chain.layer_index[goal_state] = n + 2;
    chain.side[goal_state] = GadgetSide::Goal;

    // Cross edges of one triple: plain uses the matrix entries directly, the
    // robust variant peels the cycle share off as (I - gamma C) M, whose
    // entries stay positive by the gamma interval choice.
    auto cross_prob = [&](const Matrix& m, int row, int col) -> Rational {
        if (variant == ChainVariant::Plain) return m[row][col];
        return m[row][col] - gamma * m[(row + 1) % 3][col];
    };
    auto final_prob = [&](int row) -> Rational {
        if (variant == ChainVariant::Plain) return cond.instance.final_vec[row];
        return cond.instance.final_vec[row] - gamma * cond.instance.final_vec[(row + 1) % 3];
    };

    for (int layer = 1; layer <= n; ++layer) {
        const Matrix& m0 = cond.instance.pairs[layer - 1][0];
        const Matrix& m1 = cond.instance.pairs[layer - 1][1];
        for (int w = 0; w < 3; ++w) {
            int ls = l_state(layer, w);
            int rs = r_state(layer, w);
            if (variant == ChainVariant::Robust) {
                chain.dtmc.add_transition(ls, "a", l_state(layer, (w + 1) % 3), gamma);
                chain.dtmc.add_transition(rs, "a", r_state(layer, (w + 1) % 3), gamma);
            }
            for (int c = 0; c < 3; ++c) {
                Rational p0 = cross_prob(m0, w, c);
                Rational p1 = cross_prob(m1, w, c);
                if (!(p0 > 0 && p1 > 0)) throw Error("internal: nonpositive gadget edge");
                if (layer < n) {
                    chain.dtmc.add_transition(ls, "a", l_state(layer + 1, c), p0);
                    chain.dtmc.add_transition(ls, "a", r_state(layer + 1, c), p0);
                    chain.dtmc.add_transition(rs, "a", l_state(layer + 1, c), p1);
                    chain.dtmc.add_transition(rs, "a", r_state(layer + 1, c), p1);
                } else {
                    chain.dtmc.add_transition(ls, "a", final_state(c), p0);
                    chain.dtmc.add_transition(rs, "a", final_state(c), p1);
                }
            }
        }
    }
    for (int w = 0; w < 3; ++w) {
        int fs = final_state(w);
        if (variant == ChainVariant::Robust)
            chain.dtmc.add_transition(fs, "a", final_state((w + 1) % 3), gamma);
        Rational fp = final_prob(w);
        if (!(fp > 0)) throw Error("internal: nonpositive final edge");
        chain.dtmc.add_transition(fs, "a", goal_state, fp);
    }
    chain.dtmc.goal.insert(goal_state);

    for (int w = 0; w < 3; ++w) {
        if (n >= 1) {
            chain.dtmc.initial[l_state(1, w)] = cond.instance.iota[w];
            chain.dtmc.initial[r_state(1, w)] = cond.instance.iota[w];
        } else {
            chain.dtmc.initial[final_state(w)] = cond.instance.iota[w];
        }
    }

    auto model_errs = validate_model(chain.dtmc);
    if (!model_errs.empty()) throw Error("internal: chain model invalid: " + model_errs.front());

    Blocks blocks;
    for (int layer = 1; layer <= n; ++layer) {
        std::vector<int> b;
        for (int w = 0; w < 3; ++w) b.push_back(l_state(layer, w));
        for (int w = 0; w < 3; ++w) b.push_back(r_state(layer, w));
        blocks.push_back(std::move(b));
    }
    blocks.push_back({final_state(0), final_state(1), final_state(2)});
    blocks.push_back({goal_state});
    chain.partition = DirectedTreePartition::build(underlying_graph(chain.dtmc), blocks);
    auto perrs = validate_partition(chain.dtmc, chain.partition);
    if (!perrs.empty()) throw Error("internal: chain partition invalid: " + perrs.front());
    return chain;
}

StateSet good_subsystem(const GadgetChain& chain, const std::vector<int>& sigma) {
    if (static_cast<int>(sigma.size()) != chain.n)
        throw Error("good_subsystem: sigma length differs from the layer count");
    StateSet s(chain.dtmc.num_states);
    for (int layer = 1; layer <= chain.n; ++layer) {
        int base = 6 * (layer - 1) + (sigma[layer - 1] == 0 ? 0 : 3);
        for (int w = 0; w < 3; ++w) s.insert(base + w);
    }
    for (int w = 0; w < 3; ++w) s.insert(6 * chain.n + w);
    s.insert(6 * chain.n + 3);
    return s;
}

Rational chain_subsystem_value(const GadgetChain& chain, const StateSet& states) {
    const Mdp& m = chain.dtmc;
    std::vector<Rational> value(m.num_states, Rational(0));
    const auto& p = chain.partition;
    for (auto it = p.topo_order.rbegin(); it != p.topo_order.rend(); ++it) {
        const auto& block = p.blocks[*it];
        std::vector<int> members;
        std::vector<int> local_of(m.num_states, -1);
        for (int s : block) {
            if (!states.contains(s)) continue;
            if (m.goal.contains(s)) {
                value[s] = 1;
                continue;
            }
            local_of[s] = static_cast<int>(members.size());
            members.push_back(s);
        }
        if (members.empty()) continue;
        detail::ReachSystem sys;
        sys.acts.resize(members.size());
        for (std::size_t i = 0; i < members.size(); ++i) {
            detail::ReachAction ra;
            ra.direct = 0;
            for (const auto& act : m.actions[members[i]]) {
                for (const auto& tr : act.transitions) {
                    if (!states.contains(tr.target)) continue;
                    if (local_of[tr.target] >= 0)
                        ra.moves.emplace_back(local_of[tr.target], tr.prob);
                    else
                        ra.direct += tr.prob * value[tr.target];
                }
            }
            sys.acts[i].push_back(std::move(ra));
        }
        auto x = detail::solve_reach(sys, Mode::Max);
        for (std::size_t i = 0; i < members.size(); ++i) value[members[i]] = x[i];
    }
    Rational out(0);
    for (int s = 0; s < m.num_states; ++s)
        if (states.contains(s)) out += m.initial[s] * value[s];
    return out;
}

std::pair<Mdp, DirectedTreePartition> layered_random(int layers, int width, int fanout,
                                                     std::uint64_t seed) {
    if (layers < 1 || width < 1 || fanout < 1) throw Error("layered_random: bad parameters");
    fanout = std::min(fanout, width);
    std::mt19937_64 rng(seed);
    auto randint = [&](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };

    const int goal_state = layers * width;
    Mdp m(goal_state + 1);
    for (int layer = 0; layer < layers; ++layer) {
        for (int w = 0; w < width; ++w) {
            int s = layer * width + w;
            if (layer + 1 < layers) {
                std::vector<int> pool(width);
                for (int i = 0; i < width; ++i) pool[i] = i;
                for (int k = 0; k < fanout; ++k)
                    std::swap(pool[k], pool[k + randint(0, width - k - 1)]);
                std::vector<int> targets(pool.begin(), pool.begin() + fanout);
                std::sort(targets.begin(), targets.end());
                for (int t : targets)
                    m.add_transition(s, "a", (layer + 1) * width + t,
                                     make_rational(randint(1, 8), 8L * fanout));
            } else {
                m.add_transition(s, "a", goal_state, make_rational(randint(1, 8), 8));
            }
        }
    }
    for (int w = 0; w < width; ++w) m.initial[w] = make_rational(randint(1, 8), 8L * width);
    m.goal.insert(goal_state);

    Blocks blocks;
    for (int layer = 0; layer < layers; ++layer) {
        std::vector<int> b(width);
        for (int w = 0; w < width; ++w) b[w] = layer * width + w;
        blocks.push_back(std::move(b));
    }
    blocks.push_back({goal_state});
    auto part = DirectedTreePartition::build(underlying_graph(m), blocks);
    auto errs = validate_partition(m, part);
    if (!errs.empty()) throw Error("internal: layered_random partition invalid: " + errs.front());
    return {std::move(m), std::move(part)};
}

}  // namespace treewit

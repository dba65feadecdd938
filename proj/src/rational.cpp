#include "treewit/rational.hpp"

#include <cctype>

#include "treewit/error.hpp"

namespace treewit {

namespace {

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace

std::optional<Rational> try_parse_rational(const std::string& text) {
    std::string s = text;
    bool negative = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
        negative = s[0] == '-';
        s = s.substr(1);
    }
    std::string num = s;
    std::string den = "1";
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        num = s.substr(0, slash);
        den = s.substr(slash + 1);
    }
    if (!all_digits(num) || !all_digits(den)) return std::nullopt;
    mpz_class n(num, 10);
    mpz_class d(den, 10);
    if (d == 0) return std::nullopt;
    Rational r(n, d);
    r.canonicalize();
    if (negative) r = -r;
    return r;
}

Rational parse_rational(const std::string& text) {
    auto r = try_parse_rational(text);
    if (!r) throw Error("malformed rational '" + text + "' (expected p/q or integer)");
    return *r;
}

std::string to_string(const Rational& r) {
    return r.get_str();
}

Rational rational_pow(const Rational& base, unsigned long exp) {
    Rational out;
    mpz_pow_ui(out.get_num_mpz_t(), base.get_num_mpz_t(), exp);
    mpz_pow_ui(out.get_den_mpz_t(), base.get_den_mpz_t(), exp);
    out.canonicalize();
    return out;
}

Rational make_rational(long num, long den) {
    if (den == 0) throw Error("make_rational: zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

Rational pow2_below(const Rational& bound) {
    if (bound <= 0) throw Error("pow2_below requires a positive bound");
    Rational p(1);
    if (p <= bound) {
        return p;  // caller wants 2^-k with k >= 0, so never exceed 1
    }
    while (p > bound) p /= 2;
    return p;
}

}  // namespace treewit

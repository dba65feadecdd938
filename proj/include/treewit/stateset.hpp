#pragma once

#include <cstdint>
#include <vector>

namespace treewit {

/// Fixed-universe bitset over state ids 0..universe-1. Sets are ordered by
/// the lexicographic order of their sorted element sequences, which is the
/// tie-breaking order used throughout the witness search.
class StateSet {
  public:
    StateSet() = default;
    explicit StateSet(int universe) : universe_(universe), words_((universe + 63) / 64, 0) {}

    static StateSet from_elements(int universe, const std::vector<int>& elems) {
        StateSet s(universe);
        for (int e : elems) s.insert(e);
        return s;
    }
    static StateSet full(int universe) {
        StateSet s(universe);
        for (int i = 0; i < universe; ++i) s.insert(i);
        return s;
    }

    int universe() const { return universe_; }
    bool empty() const {
        for (auto w : words_)
            if (w) return false;
        return true;
    }
    int size() const {
        int c = 0;
        for (auto w : words_) c += __builtin_popcountll(w);
        return c;
    }
    bool contains(int s) const {
        if (s < 0 || s >= universe_) return false;
        return (words_[s >> 6] >> (s & 63)) & 1u;
    }
    void insert(int s) { words_[s >> 6] |= (std::uint64_t{1} << (s & 63)); }
    void erase(int s) { words_[s >> 6] &= ~(std::uint64_t{1} << (s & 63)); }

    StateSet united(const StateSet& o) const {
        StateSet r = *this;
        for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] |= o.words_[i];
        return r;
    }
    StateSet intersected(const StateSet& o) const {
        StateSet r = *this;
        for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] &= o.words_[i];
        return r;
    }
    StateSet minus(const StateSet& o) const {
        StateSet r = *this;
        for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] &= ~o.words_[i];
        return r;
    }
    bool is_subset_of(const StateSet& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~o.words_[i]) return false;
        return true;
    }

    std::vector<int> elements() const {
        std::vector<int> out;
        out.reserve(size());
        for (std::size_t i = 0; i < words_.size(); ++i) {
            std::uint64_t w = words_[i];
            while (w) {
                int b = __builtin_ctzll(w);
                out.push_back(static_cast<int>(i * 64 + b));
                w &= w - 1;
            }
        }
        return out;
    }

    bool operator==(const StateSet& o) const {
        return universe_ == o.universe_ && words_ == o.words_;
    }
    bool operator!=(const StateSet& o) const { return !(*this == o); }

    /// Lexicographic comparison of sorted element sequences:
    /// negative if *this < o, 0 if equal, positive otherwise.
    int lex_compare(const StateSet& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i) {
            std::uint64_t diff = words_[i] ^ o.words_[i];
            if (!diff) continue;
            int b = __builtin_ctzll(diff);
            bool in_this = (words_[i] >> b) & 1u;
            // The set lacking the lowest differing element b is smaller iff it
            // also has no element beyond b (it is then a proper prefix).
            const StateSet& other = in_this ? o : *this;
            std::uint64_t rest = other.words_[i] & ~((std::uint64_t{2} << b) - 1);
            bool other_has_later = rest != 0;
            if (!other_has_later) {
                for (std::size_t j = i + 1; j < words_.size() && !other_has_later; ++j)
                    other_has_later = other.words_[j] != 0;
            }
            if (in_this) return other_has_later ? -1 : 1;
            return other_has_later ? 1 : -1;
        }
        return 0;
    }

  private:
    int universe_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace treewit

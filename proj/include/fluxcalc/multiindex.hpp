#pragma once

#include "errors.hpp"

#include <algorithm>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fluxcalc {

/// Number of p-subsets of an n-set; 0 when p is outside 0..n.
constexpr std::size_t binomial(int n, int p) noexcept {
    if (p < 0 || n < 0 || p > n) return 0;
    if (p > n - p) p = n - p;
    std::size_t v = 1;
    for (int i = 0; i < p; ++i) v = v * static_cast<std::size_t>(n - i) / static_cast<std::size_t>(i + 1);
    return v;
}

/// Strictly increasing list of 1-based coordinate indices I = {i_1 < ... < i_p}
/// in ambient dimension n. The empty index (p = 0) keys scalar components.
class MultiIndex {
public:
    MultiIndex() = default;

    /// Validates 1 <= i_1 < ... < i_p <= n.
    MultiIndex(int n, std::vector<int> indices) : n_(n), indices_(std::move(indices)) {
        if (n_ < 0) throw ShapeError("negative ambient dimension");
        if (static_cast<int>(indices_.size()) > n_)
            throw DegreeError("multi-index longer than ambient dimension " + std::to_string(n_));
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (indices_[i] < 1 || indices_[i] > n_)
                throw IndexError("index " + std::to_string(indices_[i]) + " outside 1.." + std::to_string(n_));
            if (i > 0 && indices_[i] <= indices_[i - 1])
                throw IndexError("multi-index entries must be strictly increasing");
        }
    }

    int dimension() const noexcept { return n_; }
    int degree() const noexcept { return static_cast<int>(indices_.size()); }
    const std::vector<int>& indices() const noexcept { return indices_; }
    int operator[](std::size_t i) const { return indices_[i]; }
    bool empty() const noexcept { return indices_.empty(); }

    bool contains(int i) const { return std::binary_search(indices_.begin(), indices_.end(), i); }

    /// Copy with entry at position pos (0-based) removed.
    MultiIndex without_position(std::size_t pos) const {
        MultiIndex out = *this;
        out.indices_.erase(out.indices_.begin() + static_cast<std::ptrdiff_t>(pos));
        return out;
    }

    /// Position of this index in enumerate(n, p), i.e. its lexicographic rank.
    std::size_t lex_rank() const noexcept {
        const int p = degree();
        std::size_t rank = 0;
        int prev = 0;
        for (int t = 0; t < p; ++t) {
            for (int v = prev + 1; v < indices_[static_cast<std::size_t>(t)]; ++v)
                rank += binomial(n_ - v, p - t - 1);
            prev = indices_[static_cast<std::size_t>(t)];
        }
        return rank;
    }

    /// JSON-array text, e.g. "[1,3]". Used as component keys in files.
    std::string key() const {
        std::string s = "[";
        for (std::size_t i = 0; i < indices_.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(indices_[i]);
        }
        return s + "]";
    }

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
    friend auto operator<=>(const MultiIndex& a, const MultiIndex& b) {
        if (auto c = a.n_ <=> b.n_; c != 0) return c;
        return a.indices_ <=> b.indices_;
    }

private:
    int n_ = 0;
    std::vector<int> indices_;
};

/// All C(n,p) increasing multi-indices of length p in lexicographic order.
inline std::vector<MultiIndex> enumerate(int n, int p) {
    if (p < 0 || p > n)
        throw DegreeError("degree " + std::to_string(p) + " outside 0.." + std::to_string(n));
    std::vector<MultiIndex> out;
    out.reserve(binomial(n, p));
    std::vector<int> cur(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) cur[static_cast<std::size_t>(i)] = i + 1;
    while (true) {
        out.emplace_back(n, cur);
        int pos = p - 1;
        while (pos >= 0 && cur[static_cast<std::size_t>(pos)] == n - p + pos + 1) --pos;
        if (pos < 0) break;
        ++cur[static_cast<std::size_t>(pos)];
        for (int t = pos + 1; t < p; ++t) cur[static_cast<std::size_t>(t)] = cur[static_cast<std::size_t>(t - 1)] + 1;
    }
    return out;
}

/// Result of sorting an arbitrary index tuple. `index` is empty when the
/// tuple had a repeated entry (the alternating tensor vanishes there).
struct SortedIndex {
    std::optional<MultiIndex> index;
    int sign = 0;

    bool repeated() const noexcept { return !index.has_value(); }
};

/// Sorts an index tuple with entries in 1..n and returns the sign of the
/// sorting permutation (parity of the inversion count).
inline SortedIndex sort_with_sign(std::span<const int> indices, int n) {
    std::vector<int> v(indices.begin(), indices.end());
    for (int i : v)
        if (i < 1 || i > n)
            throw IndexError("index " + std::to_string(i) + " outside 1.." + std::to_string(n));
    int inversions = 0;
    // insertion sort; tuples are short
    for (std::size_t i = 1; i < v.size(); ++i) {
        for (std::size_t j = i; j > 0 && v[j - 1] > v[j]; --j) {
            std::swap(v[j - 1], v[j]);
            ++inversions;
        }
    }
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] == v[i - 1]) return {};
    return {MultiIndex(n, std::move(v)), (inversions % 2 == 0) ? 1 : -1};
}

inline SortedIndex sort_with_sign(std::initializer_list<int> indices, int n) {
    return sort_with_sign(std::span<const int>(indices.begin(), indices.size()), n);
}

}  // namespace fluxcalc

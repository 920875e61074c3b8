#pragma once

#include "errors.hpp"
#include "multiindex.hpp"

#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace fluxcalc {

/// Components of a degree-p alternating tensor on R^n, keyed by increasing
/// multi-indices. Values for non-increasing index tuples follow by
/// alternation (see at()).
///
/// Storage is dense over enumerate(n, p) for n <= kDenseLimit and a sparse
/// map above; the public surface is identical.
class AlternatingTensor {
public:
    static constexpr int kDenseLimit = 12;

    AlternatingTensor() = default;

    AlternatingTensor(int n, int degree) : n_(n), degree_(degree) {
        if (n < 0) throw ShapeError("negative ambient dimension");
        if (degree < 0 || degree > n)
            throw DegreeError("degree " + std::to_string(degree) + " outside 0.." + std::to_string(n));
        if (n <= kDenseLimit) dense_.assign(binomial(n, degree), 0.0);
    }

    /// Scalar (degree 0) tensor.
    static AlternatingTensor scalar(int n, double value) {
        AlternatingTensor t(n, 0);
        t.set(MultiIndex(n, {}), value);
        return t;
    }

    int dimension() const noexcept { return n_; }
    int degree() const noexcept { return degree_; }
    bool is_dense() const noexcept { return n_ <= kDenseLimit; }

    double get(const MultiIndex& I) const {
        check_key(I);
        if (is_dense()) return dense_[I.lex_rank()];
        auto it = sparse_.find(I);
        return it == sparse_.end() ? 0.0 : it->second;
    }

    void set(const MultiIndex& I, double value) {
        check_key(I);
        if (is_dense()) {
            dense_[I.lex_rank()] = value;
        } else if (value == 0.0) {
            sparse_.erase(I);
        } else {
            sparse_[I] = value;
        }
    }

    void add(const MultiIndex& I, double value) { set(I, get(I) + value); }

    /// Value on an arbitrary index tuple: sign(sort) * component, 0 on repeats.
    double at(std::span<const int> indices) const {
        if (static_cast<int>(indices.size()) != degree_)
            throw ShapeError("expected " + std::to_string(degree_) + " indices");
        auto s = sort_with_sign(indices, n_);
        if (s.repeated()) return 0.0;
        return s.sign * get(*s.index);
    }
    double at(std::initializer_list<int> indices) const {
        return at(std::span<const int>(indices.begin(), indices.size()));
    }

    /// Scalar component of a degree-0 tensor.
    double value() const {
        if (degree_ != 0) throw DegreeError("value() needs a degree-0 tensor");
        return get(MultiIndex(n_, {}));
    }

    /// Stored components in lexicographic order. Dense tensors list every
    /// increasing index (zeros included); sparse tensors list nonzeros only.
    std::vector<std::pair<MultiIndex, double>> components() const {
        std::vector<std::pair<MultiIndex, double>> out;
        if (is_dense()) {
            auto keys = enumerate(n_, degree_);
            out.reserve(keys.size());
            for (std::size_t r = 0; r < keys.size(); ++r) out.emplace_back(std::move(keys[r]), dense_[r]);
        } else {
            out.assign(sparse_.begin(), sparse_.end());
        }
        return out;
    }

    std::vector<std::pair<MultiIndex, double>> nonzero_components() const {
        auto all = components();
        std::erase_if(all, [](const auto& kv) { return kv.second == 0.0; });
        return all;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& [I, v] : components()) m = std::max(m, std::abs(v));
        return m;
    }

    AlternatingTensor& operator+=(const AlternatingTensor& o) {
        check_same_shape(o);
        if (is_dense()) {
            for (std::size_t i = 0; i < dense_.size(); ++i) dense_[i] += o.dense_[i];
        } else {
            for (const auto& [I, v] : o.sparse_) add(I, v);
        }
        return *this;
    }
    AlternatingTensor& operator-=(const AlternatingTensor& o) { return *this += (-1.0) * o; }
    AlternatingTensor& operator*=(double s) {
        if (is_dense()) {
            for (double& v : dense_) v *= s;
        } else if (s == 0.0) {
            sparse_.clear();
        } else {
            for (auto& [I, v] : sparse_) v *= s;
        }
        return *this;
    }

    friend AlternatingTensor operator+(AlternatingTensor a, const AlternatingTensor& b) { return a += b; }
    friend AlternatingTensor operator-(AlternatingTensor a, const AlternatingTensor& b) { return a -= b; }
    friend AlternatingTensor operator*(double s, AlternatingTensor a) { return a *= s; }

    friend bool operator==(const AlternatingTensor& a, const AlternatingTensor& b) {
        return a.n_ == b.n_ && a.degree_ == b.degree_ && a.dense_ == b.dense_ && a.sparse_ == b.sparse_;
    }

private:
    void check_key(const MultiIndex& I) const {
        if (I.dimension() != n_ || I.degree() != degree_)
            throw ShapeError("component key " + I.key() + " does not fit a degree-" + std::to_string(degree_) +
                             " tensor on R^" + std::to_string(n_));
    }
    void check_same_shape(const AlternatingTensor& o) const {
        if (o.n_ != n_ || o.degree_ != degree_) throw ShapeError("tensor shapes differ");
    }

    int n_ = 0;
    int degree_ = 0;
    std::vector<double> dense_;
    std::map<MultiIndex, double> sparse_;
};

/// Max-norm of a - b over all components.
inline double max_abs_difference(const AlternatingTensor& a, const AlternatingTensor& b) {
    return (a - b).max_abs();
}

/// Determinant of the rows I (1-based) of the n x p column matrix.
inline double minor_determinant(const Matrix& vectors, const MultiIndex& I) {
    const auto p = static_cast<Eigen::Index>(I.degree());
    if (p == 0) return 1.0;
    auto at = [&](Eigen::Index r, Eigen::Index c) { return vectors(I[static_cast<std::size_t>(r)] - 1, c); };
    if (p == 1) return at(0, 0);
    if (p == 2) return at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
    Matrix sub(p, p);
    for (Eigen::Index r = 0; r < p; ++r) sub.row(r) = vectors.row(I[static_cast<std::size_t>(r)] - 1);
    return sub.determinant();
}

/// Evaluates t on the p columns of `vectors` (an n x p matrix):
/// sum over I of t[I] * det(rows I of the column matrix).
inline double apply_tensor(const AlternatingTensor& t, const Matrix& vectors) {
    if (vectors.rows() != t.dimension() || vectors.cols() != t.degree())
        throw ShapeError("apply_tensor: expected " + std::to_string(t.degree()) + " vectors in R^" +
                         std::to_string(t.dimension()) + ", got " + std::to_string(vectors.cols()) +
                         " vectors in R^" + std::to_string(vectors.rows()));
    for (Eigen::Index a = 0; a < vectors.cols(); ++a)
        for (Eigen::Index b = a + 1; b < vectors.cols(); ++b)
            if (vectors.col(a) == vectors.col(b)) return 0.0;
    double sum = 0.0;
    for (const auto& [I, v] : t.components())
        if (v != 0.0) sum += v * minor_determinant(vectors, I);
    return sum;
}

inline double apply_tensor(const AlternatingTensor& t, std::span<const Point> vectors) {
    Matrix m(t.dimension(), static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t j = 0; j < vectors.size(); ++j) {
        if (vectors[j].size() != t.dimension()) throw ShapeError("apply_tensor: vector dimension mismatch");
        m.col(static_cast<Eigen::Index>(j)) = vectors[j];
    }
    return apply_tensor(t, m);
}

}  // namespace fluxcalc

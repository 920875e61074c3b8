#pragma once

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fluxcalc {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const noexcept { return hi - lo; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// A k-block: a product of k non-degenerate closed intervals. The 0-block
/// (empty product) is a single point with volume 1.
class Block {
public:
    Block() = default;

    explicit Block(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
        for (std::size_t i = 0; i < intervals_.size(); ++i)
            if (!(intervals_[i].lo < intervals_[i].hi))
                throw ShapeError("degenerate interval [" + std::to_string(intervals_[i].lo) + ", " +
                                 std::to_string(intervals_[i].hi) + "] on axis " + std::to_string(i + 1));
    }

    Block(std::initializer_list<Interval> intervals) : Block(std::vector<Interval>(intervals)) {}

    /// [lo, lo + h_1] x ... x [lo, lo + h_k] shifted by `corner`.
    static Block from_corner(const Point& corner, const Point& sides) {
        std::vector<Interval> iv;
        for (Eigen::Index i = 0; i < corner.size(); ++i) iv.push_back({corner[i], corner[i] + sides[i]});
        return Block(std::move(iv));
    }

    /// Axis-aligned cube of half-width r centred at c.
    static Block cube(const Point& c, double r) {
        std::vector<Interval> iv;
        for (Eigen::Index i = 0; i < c.size(); ++i) iv.push_back({c[i] - r, c[i] + r});
        return Block(std::move(iv));
    }

    int dimension() const noexcept { return static_cast<int>(intervals_.size()); }
    const std::vector<Interval>& intervals() const noexcept { return intervals_; }
    const Interval& operator[](std::size_t i) const { return intervals_[i]; }

    double volume() const noexcept {
        double v = 1.0;
        for (const auto& iv : intervals_) v *= iv.length();
        return v;
    }
    /// L(B): longest side.
    double longest_side() const noexcept {
        double m = 0.0;
        for (const auto& iv : intervals_) m = std::max(m, iv.length());
        return m;
    }
    /// l(B): shortest side.
    double shortest_side() const noexcept {
        if (intervals_.empty()) return 0.0;
        double m = intervals_.front().length();
        for (const auto& iv : intervals_) m = std::min(m, iv.length());
        return m;
    }
    double aspect_ratio() const noexcept { return intervals_.empty() ? 1.0 : longest_side() / shortest_side(); }

    Point lower() const {
        Point p(dimension());
        for (int i = 0; i < dimension(); ++i) p[i] = intervals_[static_cast<std::size_t>(i)].lo;
        return p;
    }
    Point sides() const {
        Point p(dimension());
        for (int i = 0; i < dimension(); ++i) p[i] = intervals_[static_cast<std::size_t>(i)].length();
        return p;
    }
    Point center() const {
        Point p(dimension());
        for (int i = 0; i < dimension(); ++i) {
            const auto& iv = intervals_[static_cast<std::size_t>(i)];
            p[i] = 0.5 * (iv.lo + iv.hi);
        }
        return p;
    }

    bool contains(const Point& t) const {
        if (t.size() != dimension()) return false;
        for (int i = 0; i < dimension(); ++i) {
            const auto& iv = intervals_[static_cast<std::size_t>(i)];
            if (t[i] < iv.lo || t[i] > iv.hi) return false;
        }
        return true;
    }

    /// True when `inner` lies in the open interior of this block.
    bool strictly_contains(const Block& inner) const {
        if (inner.dimension() != dimension()) return false;
        for (std::size_t i = 0; i < intervals_.size(); ++i)
            if (!(inner[i].lo > intervals_[i].lo && inner[i].hi < intervals_[i].hi)) return false;
        return true;
    }

    /// Distance from t to the block boundary (t assumed inside).
    double distance_to_boundary(const Point& t) const {
        double d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dimension(); ++i) {
            const auto& iv = intervals_[static_cast<std::size_t>(i)];
            d = std::min({d, t[i] - iv.lo, iv.hi - t[i]});
        }
        return d;
    }

    /// Copy with axis i (0-based) removed.
    Block without_axis(std::size_t i) const {
        Block b = *this;
        b.intervals_.erase(b.intervals_.begin() + static_cast<std::ptrdiff_t>(i));
        return b;
    }

    friend bool operator==(const Block&, const Block&) = default;

private:
    std::vector<Interval> intervals_;
};

/// t -> A t + b with A an n x k matrix.
struct AffineMap {
    Matrix linear;
    Point offset;

    friend bool operator==(const AffineMap& a, const AffineMap& b) {
        return a.linear.rows() == b.linear.rows() && a.linear.cols() == b.linear.cols() && a.linear == b.linear &&
               a.offset.size() == b.offset.size() && a.offset == b.offset;
    }
};

/// A C^1 map c from a k-block into R^n. The map must be defined (and
/// concurrently callable) on the whole domain block; where it comes from an
/// open set is the caller's business.
class SingularBlock {
public:
    using Map = std::function<Point(const Point&)>;
    using Jacobian = std::function<Matrix(const Point&)>;

    SingularBlock() = default;

    static SingularBlock inclusion(const Block& domain, int n = -1) {
        const int k = domain.dimension();
        if (n < 0) n = k;
        if (n < k) throw ShapeError("inclusion of a " + std::to_string(k) + "-block into R^" + std::to_string(n));
        Matrix a = Matrix::Identity(n, k);
        SingularBlock sb = affine(domain, a, Point::Zero(n));
        sb.label_ = "inclusion";
        return sb;
    }

    static SingularBlock affine(const Block& domain, Matrix linear, Point offset) {
        if (linear.cols() != domain.dimension() || linear.rows() != offset.size())
            throw ShapeError("affine map shape does not match the domain block");
        SingularBlock sb;
        sb.domain_ = domain;
        sb.n_ = static_cast<int>(offset.size());
        sb.affine_ = AffineMap{linear, offset};
        sb.map_ = [a = std::move(linear), b = std::move(offset)](const Point& t) -> Point { return a * t + b; };
        sb.jacobian_ = [a = sb.affine_->linear](const Point&) { return a; };
        sb.label_ = "affine";
        return sb;
    }

    /// General map; without an explicit jacobian the derivative is taken by
    /// central differences that never step outside the domain block.
    static SingularBlock from_map(const Block& domain, int n, Map map, Jacobian jacobian = {},
                                  std::string label = "map") {
        if (!map) throw ShapeError("singular block needs a map");
        SingularBlock sb;
        sb.domain_ = domain;
        sb.n_ = n;
        sb.map_ = std::move(map);
        sb.jacobian_ = std::move(jacobian);
        sb.label_ = std::move(label);
        return sb;
    }

    /// 0-block at a point.
    static SingularBlock point(const Point& p) {
        SingularBlock sb = affine(Block{}, Matrix(p.size(), 0), p);
        sb.label_ = "point";
        return sb;
    }

    const Block& domain() const noexcept { return domain_; }
    int dimension() const noexcept { return domain_.dimension(); }
    int target_dimension() const noexcept { return n_; }
    const std::optional<AffineMap>& affine_map() const noexcept { return affine_; }
    bool has_jacobian() const noexcept { return static_cast<bool>(jacobian_); }
    const std::string& label() const noexcept { return label_; }

    Point operator()(const Point& t) const {
        if (t.size() != dimension()) throw ShapeError("parameter dimension mismatch");
        Point y = map_(t);
        if (y.size() != n_) throw ShapeError("map returned a point of the wrong dimension");
        return y;
    }

    /// n x k Jacobian at t. `step` overrides the finite-difference step.
    Matrix jacobian(const Point& t, std::optional<double> step = std::nullopt) const {
        if (jacobian_) return jacobian_(t);
        const int k = dimension();
        Matrix jac(n_, k);
        for (int i = 0; i < k; ++i) {
            const auto& iv = domain_[static_cast<std::size_t>(i)];
            const double h = step ? *step : std::max(1e-6, 1e-8 * std::abs(t[i]));
            Point lo = t, hi = t;
            const bool fwd = t[i] + h <= iv.hi;
            const bool back = t[i] - h >= iv.lo;
            if (fwd && back) {
                hi[i] += h;
                lo[i] -= h;
            } else if (fwd) {
                hi[i] += h;
            } else if (back) {
                lo[i] -= h;
            } else {
                lo[i] = iv.lo;
                hi[i] = iv.hi;
            }
            jac.col(i) = ((*this)(hi) - (*this)(lo)) / (hi[i] - lo[i]);
        }
        return jac;
    }

    /// Face c_ij: coordinate i (1-based) frozen at its lower (j = 0) or upper
    /// (j = 1) endpoint.
    friend SingularBlock face(const SingularBlock& sb, int i, int j);

private:
    Block domain_;
    int n_ = 0;
    Map map_;
    Jacobian jacobian_;
    std::optional<AffineMap> affine_;
    std::string label_;
};

inline SingularBlock face(const SingularBlock& sb, int i, int j) {
    const int k = sb.dimension();
    if (i < 1 || i > k) throw AxisError("face axis " + std::to_string(i) + " outside 1.." + std::to_string(k));
    if (j != 0 && j != 1) throw AxisError("face side must be 0 or 1");
    const auto axis = static_cast<std::size_t>(i - 1);
    const double frozen = j == 0 ? sb.domain()[axis].lo : sb.domain()[axis].hi;
    Block dom = sb.domain().without_axis(axis);

    if (sb.affine_map()) {
        const auto& am = *sb.affine_map();
        Matrix lin(am.linear.rows(), k - 1);
        for (int c = 0, o = 0; c < k; ++c)
            if (c != i - 1) lin.col(o++) = am.linear.col(c);
        Point off = am.offset + am.linear.col(i - 1) * frozen;
        SingularBlock f = SingularBlock::affine(dom, lin, off);
        f.label_ = k == 1 ? "point" : sb.label_;
        return f;
    }

    auto lift = [axis, frozen, k](const Point& s) {
        Point t(k);
        for (int c = 0, o = 0; c < k; ++c) t[c] = (c == static_cast<int>(axis)) ? frozen : s[o++];
        return t;
    };
    SingularBlock::Map m = [parent = sb.map_, lift](const Point& s) { return parent(lift(s)); };
    SingularBlock::Jacobian jac;
    if (sb.jacobian_) {
        jac = [pj = sb.jacobian_, lift, axis, k](const Point& s) {
            Matrix full = pj(lift(s));
            Matrix out(full.rows(), k - 1);
            for (int c = 0, o = 0; c < k; ++c)
                if (c != static_cast<int>(axis)) out.col(o++) = full.col(c);
            return out;
        };
    }
    return SingularBlock::from_map(dom, sb.n_, std::move(m), std::move(jac), sb.label_);
}

struct ChainTerm {
    int coefficient = 0;
    SingularBlock block;
};

/// Integer-weighted formal sum of singular k-blocks in R^n.
class Chain {
public:
    Chain() = default;
    Chain(int n, int k) : n_(n), k_(k) {}

    explicit Chain(const SingularBlock& sb, int coefficient = 1)
        : n_(sb.target_dimension()), k_(sb.dimension()) {
        add(coefficient, sb);
    }

    int target_dimension() const noexcept { return n_; }
    int dimension() const noexcept { return k_; }
    const std::vector<ChainTerm>& terms() const noexcept { return terms_; }
    bool empty() const noexcept { return terms_.empty(); }

    /// Appends a term; zero coefficients are dropped.
    Chain& add(int coefficient, SingularBlock sb) {
        if (sb.target_dimension() != n_ || sb.dimension() != k_)
            throw ShapeError("chain term has shape (k=" + std::to_string(sb.dimension()) + ", n=" +
                             std::to_string(sb.target_dimension()) + "), chain expects (k=" + std::to_string(k_) +
                             ", n=" + std::to_string(n_) + ")");
        if (coefficient != 0) terms_.push_back({coefficient, std::move(sb)});
        return *this;
    }

    Chain& operator+=(const Chain& o) {
        for (const auto& t : o.terms_) add(t.coefficient, t.block);
        return *this;
    }

private:
    int n_ = 0;
    int k_ = 0;
    std::vector<ChainTerm> terms_;
};

/// Boundary: sum over i = 1..k, j = 0,1 of (-1)^(i+j) c_ij for every term.
/// The boundary of a 0-chain is the zero chain (empty, dimension 0).
inline Chain boundary(const Chain& c) {
    if (c.dimension() == 0) return Chain(c.target_dimension(), 0);
    Chain out(c.target_dimension(), c.dimension() - 1);
    for (const auto& term : c.terms())
        for (int i = 1; i <= c.dimension(); ++i)
            for (int j = 0; j <= 1; ++j) out.add(term.coefficient * (((i + j) % 2 == 0) ? 1 : -1), face(term.block, i, j));
    return out;
}

inline Chain boundary(const SingularBlock& sb) { return boundary(Chain(sb)); }

}  // namespace fluxcalc

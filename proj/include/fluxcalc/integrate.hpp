#pragma once

#include "chains.hpp"
#include "errors.hpp"
#include "field.hpp"
#include "tensor.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace fluxcalc {

/// Composite midpoint rule with m cells per axis. With rtol > 0 the chain
/// integral is repeated with m doubled until two successive estimates agree
/// to rtol (relative) or m exceeds max_subdivisions.
struct QuadratureSpec {
    int subdivisions = 64;
    double rtol = 0.0;
    int max_subdivisions = 4096;
    /// Finite-difference step for maps without an analytic Jacobian;
    /// default max(1e-6, 1e-8 |t_i|).
    std::optional<double> jacobian_step;
};

/// Pairwise (cascade) summation fed one term at a time. The association order
/// depends only on the number of terms, so sums are reproducible.
class PairwiseSum {
public:
    void add(double x) {
        std::size_t level = 0;
        while (level < partial_.size() && filled_[level]) {
            x = partial_[level] + x;
            filled_[level] = false;
            ++level;
        }
        if (level == partial_.size()) {
            partial_.push_back(0.0);
            filled_.push_back(false);
        }
        partial_[level] = x;
        filled_[level] = true;
    }

    double total() const {
        double s = 0.0;
        for (std::size_t l = 0; l < partial_.size(); ++l)
            if (filled_[l]) s += partial_[l];
        return s;
    }

private:
    std::vector<double> partial_;
    std::vector<bool> filled_;
};

namespace detail {

inline void validate(const QuadratureSpec& q) {
    if (q.subdivisions < 1) throw ShapeError("quadrature needs at least one subdivision per axis");
}

/// Midpoint sum of f over m^k cells of `domain` (times cell volume). For the
/// 0-block, f is evaluated once at the empty point. Cells are visited in
/// lexicographic order, last axis fastest.
template <class F>
double midpoint_sum(const Block& domain, int m, F&& f) {
    const int k = domain.dimension();
    if (k == 0) return f(Point(0));
    const double total_nodes = std::pow(static_cast<double>(m), k);
    if (total_nodes > 5e8) throw ShapeError("quadrature grid too large");
    Point lower = domain.lower();
    Point h = domain.sides() / m;
    const double cell = h.prod();
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    Point t(k);
    PairwiseSum sum;
    while (true) {
        for (int a = 0; a < k; ++a) t[a] = lower[a] + (idx[static_cast<std::size_t>(a)] + 0.5) * h[a];
        sum.add(f(t));
        int a = k - 1;
        while (a >= 0 && ++idx[static_cast<std::size_t>(a)] == m) {
            idx[static_cast<std::size_t>(a)] = 0;
            --a;
        }
        if (a < 0) break;
    }
    return sum.total() * cell;
}

inline AlternatingTensor sample_at_node(const FormField& field, const SingularBlock& sb, const Point& t) {
    const Point x = sb(t);
    try {
        return field.sample(x);
    } catch (const SamplingError& e) {
        throw SamplingError(std::string(e.what()) + " (quadrature node t=" + format_point(t) + ")", e.point());
    }
}

inline void check_degree(const FormField& field, const SingularBlock& sb) {
    if (field.degree() != sb.dimension())
        throw DegreeError("cannot integrate a degree-" + std::to_string(field.degree()) + " form over a " +
                          std::to_string(sb.dimension()) + "-dimensional block");
    if (field.dimension() != sb.target_dimension())
        throw ShapeError("form lives on R^" + std::to_string(field.dimension()) + ", block maps into R^" +
                         std::to_string(sb.target_dimension()));
}

}  // namespace detail

/// (c*omega)_t(e_1, ..., e_k) = omega_{c(t)}(c'(t) e_1, ..., c'(t) e_k).
inline double pullback_density(const SingularBlock& sb, const FormField& field, const Point& t,
                               std::optional<double> jacobian_step = std::nullopt) {
    detail::check_degree(field, sb);
    const AlternatingTensor w = detail::sample_at_node(field, sb, t);
    if (sb.dimension() == 0) return w.value();
    return apply_tensor(w, sb.jacobian(t, jacobian_step));
}

/// Integral of a degree-k form over a singular k-block with fixed m.
inline double integrate_over_singular_block(const FormField& field, const SingularBlock& sb,
                                            const QuadratureSpec& q = {}) {
    detail::check_degree(field, sb);
    detail::validate(q);
    if (sb.affine_map() && sb.dimension() > 0) {
        // constant Jacobian: minors once per block
        const auto keys = enumerate(field.dimension(), field.degree());
        std::vector<double> minors;
        minors.reserve(keys.size());
        for (const auto& I : keys) minors.push_back(minor_determinant(sb.affine_map()->linear, I));
        return detail::midpoint_sum(sb.domain(), q.subdivisions, [&](const Point& t) {
            const AlternatingTensor w = detail::sample_at_node(field, sb, t);
            double s = 0.0;
            if (w.is_dense()) {
                const auto comps = w.components();
                for (std::size_t r = 0; r < comps.size(); ++r)
                    if (minors[r] != 0.0) s += comps[r].second * minors[r];
            } else {
                for (const auto& [I, v] : w.components()) s += v * minors[I.lex_rank()];
            }
            return s;
        });
    }
    return detail::midpoint_sum(sb.domain(), q.subdivisions,
                                [&](const Point& t) { return pullback_density(sb, field, t, q.jacobian_step); });
}

struct QuadratureResult {
    double value = 0.0;
    int subdivisions = 0;
    bool converged = true;
};

namespace detail {

inline double chain_sum(const FormField& field, const Chain& c, const QuadratureSpec& q) {
    PairwiseSum s;
    for (const auto& term : c.terms()) s.add(term.coefficient * integrate_over_singular_block(field, term.block, q));
    return s.total();
}

}  // namespace detail

/// Integral over a chain, with the doubling loop when q.rtol > 0.
inline QuadratureResult integrate_over_chain_report(const FormField& field, const Chain& c,
                                                    const QuadratureSpec& q = {}) {
    detail::validate(q);
    if (c.empty()) return {0.0, q.subdivisions, true};
    if (c.dimension() != field.degree())
        throw DegreeError("cannot integrate a degree-" + std::to_string(field.degree()) + " form over a " +
                          std::to_string(c.dimension()) + "-chain");
    double prev = detail::chain_sum(field, c, q);
    if (q.rtol <= 0.0 || c.dimension() == 0) return {prev, q.subdivisions, true};
    QuadratureSpec cur = q;
    while (cur.subdivisions * 2 <= q.max_subdivisions) {
        cur.subdivisions *= 2;
        const double next = detail::chain_sum(field, c, cur);
        if (std::abs(next - prev) <= q.rtol * std::abs(next)) return {next, cur.subdivisions, true};
        prev = next;
    }
    return {prev, cur.subdivisions, false};
}

inline double integrate_over_chain(const FormField& field, const Chain& c, const QuadratureSpec& q = {}) {
    return integrate_over_chain_report(field, c, q).value;
}

/// Integral of a degree-(k-1) form over the boundary of a singular k-block.
inline double boundary_integral(const FormField& field, const SingularBlock& sb, const QuadratureSpec& q = {}) {
    if (field.degree() != sb.dimension() - 1)
        throw DegreeError("boundary integral of a " + std::to_string(sb.dimension()) + "-block needs a degree-" +
                          std::to_string(sb.dimension() - 1) + " form");
    return integrate_over_chain(field, boundary(sb), q);
}

}  // namespace fluxcalc

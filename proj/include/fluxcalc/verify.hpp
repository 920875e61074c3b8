#pragma once

#include "chains.hpp"
#include "deriv.hpp"
#include "errors.hpp"
#include "field.hpp"
#include "integrate.hpp"
#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fluxcalc {

struct StokesOptions {
    /// Use the field's analytic derivative for the interior integral when it has one.
    bool use_analytic_derivative = false;
    /// Floor of the node-dependent stencil half-width.
    double min_eps = 1e-8;
    /// Stencil half-width as a fraction of the node's distance to the block boundary.
    double boundary_fraction = 0.1;
};

struct StokesReport {
    double lhs = 0.0;  // integral over the boundary chain
    double rhs = 0.0;  // integral of D omega over the chain
    double residual = 0.0;
};

/// |int_{dc} omega - int_c D omega|. At each interior quadrature node t the
/// stencil half-width is min(cfg eps, max(min_eps, boundary_fraction * dist(t, dB)))
/// so stencils stay inside the block.
inline StokesReport stokes_residual(const FormField& field, const Chain& c, const DerivConfig& cfg = {},
                                    const QuadratureSpec& q = {}, const StokesOptions& opts = {}) {
    if (c.empty()) return {};
    if (field.degree() != c.dimension() - 1)
        throw DegreeError("Stokes check over a " + std::to_string(c.dimension()) + "-chain needs a degree-" +
                          std::to_string(c.dimension() - 1) + " form");
    StokesReport r;
    r.lhs = integrate_over_chain(field, boundary(c), q);

    const bool analytic = opts.use_analytic_derivative && field.has_analytic_derivative();
    PairwiseSum total;
    for (const auto& term : c.terms()) {
        const SingularBlock& sb = term.block;
        const double value = detail::midpoint_sum(sb.domain(), q.subdivisions, [&](const Point& t) {
            const Point y = sb(t);
            AlternatingTensor d;
            if (analytic) {
                d = field.analytic_derivative(y);
            } else {
                DerivConfig local = cfg;
                local.eps = std::min(cfg.eps_at(y),
                                     std::max(opts.min_eps, opts.boundary_fraction * sb.domain().distance_to_boundary(t)));
                try {
                    d = exterior_derivative_at(field, y, local);
                } catch (const SamplingError& e) {
                    throw SamplingError(std::string(e.what()) + " (quadrature node t=" + detail::format_point(t) + ")",
                                        e.point());
                }
            }
            return apply_tensor(d, sb.jacobian(t, q.jacobian_step));
        });
        total.add(term.coefficient * value);
    }
    r.rhs = total.total();
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

struct DSquaredConfig {
    DerivConfig outer = [] {
        DerivConfig c;
        c.eps = 1e-3;
        return c;
    }();
    DerivConfig inner = [] {
        DerivConfig c;
        c.eps = 1e-4;
        return c;
    }();
};

/// Max-norm of D applied (with the outer stencil) to y -> D omega_y (inner stencil).
inline double d_squared_residual(const FormField& field, const Point& x, const DSquaredConfig& cfg = {}) {
    if (field.degree() + 2 > field.dimension())
        throw DegreeError("D^2 of a degree-" + std::to_string(field.degree()) + " form on R^" +
                          std::to_string(field.dimension()) + " has no components");
    const DerivConfig inner = cfg.inner;
    FormField first(field.dimension(), field.degree() + 1,
                    [field, inner](const Point& y) { return exterior_derivative_at(field, y, inner); });
    return exterior_derivative_at(first, x, cfg.outer).max_abs();
}

/// Max-norm of (stencil D omega_x - analytic d omega_x).
inline double compatibility_check(const FormField& field, const Point& x, const DerivConfig& cfg = {}) {
    if (!field.has_analytic_derivative())
        throw UnsupportedError("compatibility check needs a field with an analytic exterior derivative");
    return max_abs_difference(exterior_derivative_at(field, x, cfg), field.analytic_derivative(x));
}

struct MvtOptions {
    int max_depth = 10;
    /// Stop once the selected block's longest side drops below this.
    double min_side = 1e-6;
    /// Root-finding tolerance on the flux-average mismatch (scaled by max(1, |target|)).
    double root_tol = 1e-10;
    int max_bisection = 60;
    /// Mismatches at or below this (scaled) count as zero when classifying sub-blocks.
    double zero_tol = 1e-12;
};

struct MvtLevel {
    Block block;
    double average = 0.0;  // (1/vol) * boundary flux of `block`
};

struct MvtResult {
    Point xi;
    double target = 0.0;    // average boundary flux of the original block
    double attained = 0.0;  // D omega_xi(e_1, ..., e_k)
    int depth = 0;
    double residual = 0.0;
    /// levels[0] is the original block; levels[d] the block selected at depth d.
    std::vector<MvtLevel> levels;
};

/// Mean-value point for the average boundary flux of a (k-1)-form over a
/// k-block in R^k. Each step splits the block into 3^k sub-blocks of 1/3
/// side length and picks a translate x + beta of the sub-block shape beta with
/// the same average flux, by bisection along the path first-negative ->
/// centre -> first-positive sub-block corner. All sub-averages equal selects
/// the centre translate.
inline MvtResult mvt_locate(const FormField& field, const Block& block, const DerivConfig& cfg = {},
                            const QuadratureSpec& q = {}, const MvtOptions& opts = {}) {
    const int k = block.dimension();
    if (k < 1) throw ShapeError("mean-value location needs a block of dimension >= 1");
    if (field.dimension() != k) throw ShapeError("mean-value location works on blocks in R^k with k = n");
    if (field.degree() != k - 1) throw DegreeError("mean-value location on a k-block needs a degree-(k-1) form");

    auto average = [&](const Block& b) { return boundary_integral(field, SingularBlock::inclusion(b), q) / b.volume(); };

    MvtResult res;
    res.target = average(block);
    res.levels.push_back({block, res.target});
    const double scale = std::max(1.0, std::abs(res.target));

    Block current = block;
    for (int depth = 1; depth <= opts.max_depth && current.longest_side() >= opts.min_side; ++depth) {
        const Point a = current.lower();
        const Point h = current.sides() / 3.0;
        auto mismatch = [&](const Point& corner) { return average(Block::from_corner(corner, h)) - res.target; };

        std::optional<Point> neg, pos;
        std::vector<int> c(static_cast<std::size_t>(k), 0);
        while (true) {
            Point corner = a;
            for (int i = 0; i < k; ++i) corner[i] += c[static_cast<std::size_t>(i)] * h[i];
            const double v = mismatch(corner);
            if (v < -opts.zero_tol * scale && !neg) neg = corner;
            if (v > opts.zero_tol * scale && !pos) pos = corner;
            int i = k - 1;
            while (i >= 0 && ++c[static_cast<std::size_t>(i)] == 3) c[static_cast<std::size_t>(i--)] = 0;
            if (i < 0) break;
        }

        const Point centre = a + h;
        Point chosen = centre;
        if (neg && pos) {
            auto gamma = [&](double theta) -> Point {
                return theta <= 0.5 ? Point(*neg + 2.0 * theta * (centre - *neg))
                                    : Point(centre + (2.0 * theta - 1.0) * (*pos - centre));
            };
            double lo = 0.0, hi = 1.0;
            double best_theta = 0.5;
            double best_abs = std::numeric_limits<double>::infinity();
            bool found = false;
            for (int it = 0; it < opts.max_bisection; ++it) {
                const double theta = 0.5 * (lo + hi);
                const double v = mismatch(gamma(theta));
                if (std::abs(v) < best_abs) {
                    best_abs = std::abs(v);
                    best_theta = theta;
                }
                if (std::abs(v) <= opts.root_tol * scale) {
                    found = true;
                    break;
                }
                (v < 0.0 ? lo : hi) = theta;
            }
            if (!found)
                throw BracketingError("no translate with the parent's average flux found; best mismatch " +
                                          std::to_string(best_abs) + " (field not flux-continuous?)",
                                      depth);
            chosen = gamma(best_theta);
        }
        current = Block::from_corner(chosen, h);
        res.levels.push_back({current, average(current)});
        res.depth = depth;
    }

    res.xi = current.center();
    MultiIndex top(k, [k] {
        std::vector<int> v;
        for (int i = 1; i <= k; ++i) v.push_back(i);
        return v;
    }());
    res.attained = exterior_derivative_at(field, res.xi, cfg).get(top);
    res.residual = std::abs(res.attained - res.target);
    return res;
}

}  // namespace fluxcalc

#pragma once

#include <fluxcalc/fluxcalc.hpp>

#include <random>

namespace fluxcalc::testing {

inline FormField form(const std::string& text, int n, int degree) { return parse_form(text, n, degree).to_field(); }

inline FormField form(const std::string& text, int n, int degree, const std::string& dtext) {
    const auto d = parse_form(dtext, n, degree + 1);
    return parse_form(text, n, degree).to_field([d](const Point& x) { return d.evaluate(x); });
}

inline Point pt(std::initializer_list<double> v) {
    Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

inline QuadratureSpec subdiv(int m) {
    QuadratureSpec q;
    q.subdivisions = m;
    return q;
}

inline DerivConfig with_eps(double e) {
    DerivConfig c;
    c.eps = e;
    return c;
}

inline Point uniform_point(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Point p(n);
    for (int i = 0; i < n; ++i) p[i] = u(rng);
    return p;
}

inline Matrix uniform_matrix(std::mt19937_64& rng, int rows, int cols, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
    return m;
}

}  // namespace fluxcalc::testing

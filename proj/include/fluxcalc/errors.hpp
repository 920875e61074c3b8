#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace fluxcalc {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Degree outside 0..n, or a degree mismatch between a form and its consumer.
class DegreeError : public Error {
public:
    using Error::Error;
};

/// Multi-index entry outside 1..n.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Wrong vector count, wrong dimension, malformed block.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Face axis outside 1..k.
class AxisError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// A sampler could not answer at a point. The point is kept so callers
/// (the CLI in particular) can report which stencil node or quadrature
/// node was missing.
class SamplingError : public Error {
public:
    SamplingError(const std::string& what, Point where)
        : Error(what), point_(std::move(where)) {}

    const Point& point() const noexcept { return point_; }

private:
    Point point_;
};

/// Syntax or semantic error in a form expression. Line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(what + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Root bracketing failed while locating a mean-value point.
class BracketingError : public Error {
public:
    BracketingError(const std::string& what, int depth)
        : Error(what + " (depth " + std::to_string(depth) + ")"), depth_(depth) {}

    int depth() const noexcept { return depth_; }

private:
    int depth_;
};

namespace detail {

inline std::string format_point(const Point& x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i) os << ", ";
        os << x[i];
    }
    os << ')';
    return os.str();
}

}  // namespace detail
}  // namespace fluxcalc

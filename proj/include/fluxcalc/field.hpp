#pragma once

#include "errors.hpp"
#include "tensor.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fluxcalc {

/// Builds an alternating tensor from a raw dictionary of index tuples, as the
/// black-box sampler does: each tuple is moved to its increasing key with the
/// sign of the sorting permutation. Tuples with repeated entries must carry 0.
/// Two tuples landing on the same key must agree after the sign flip.
inline AlternatingTensor antisymmetrize(int n, int degree,
                                        const std::vector<std::pair<std::vector<int>, double>>& raw) {
    AlternatingTensor t(n, degree);
    std::map<MultiIndex, double> assigned;
    for (const auto& [tuple, value] : raw) {
        if (static_cast<int>(tuple.size()) != degree)
            throw ShapeError("component tuple of length " + std::to_string(tuple.size()) + " in a degree-" +
                             std::to_string(degree) + " form");
        auto s = sort_with_sign(tuple, n);
        if (s.repeated()) {
            if (value != 0.0) throw ShapeError("nonzero value on a repeated index tuple");
            continue;
        }
        const double v = s.sign * value;
        auto [it, inserted] = assigned.emplace(*s.index, v);
        if (!inserted && it->second != v)
            throw ShapeError("inconsistent values for component " + s.index->key());
        t.set(*s.index, v);
    }
    return t;
}

/// A differential form given only through point samples: x -> components
/// of omega at x. Optionally carries the analytic exterior derivative, used
/// for compatibility checks and as the exact right-hand side in Stokes runs.
///
/// Samplers must be pure and safe to call concurrently. A sampler wrapping a
/// non-reentrant resource is constructed with `thread_safe = false`; calls
/// are then serialized through a shared mutex.
class FormField {
public:
    using Sampler = std::function<AlternatingTensor(const Point&)>;

    FormField() = default;

    FormField(int n, int degree, Sampler sampler, Sampler analytic_derivative = {}, bool thread_safe = true)
        : n_(n), degree_(degree), sampler_(std::move(sampler)), derivative_(std::move(analytic_derivative)) {
        if (degree < 0 || degree > n)
            throw DegreeError("form degree " + std::to_string(degree) + " outside 0.." + std::to_string(n));
        if (!sampler_) throw ShapeError("FormField needs a sampler");
        if (!thread_safe) lock_ = std::make_shared<std::mutex>();
    }

    static FormField constant(const AlternatingTensor& value) {
        const int n = value.dimension();
        const int p = value.degree();
        Sampler d;
        if (p < n) d = [n, p](const Point&) { return AlternatingTensor(n, p + 1); };
        return FormField(n, p, [value](const Point&) { return value; }, d);
    }

    static FormField zero(int n, int degree) { return constant(AlternatingTensor(n, degree)); }

    int dimension() const noexcept { return n_; }
    int degree() const noexcept { return degree_; }

    bool has_analytic_derivative() const noexcept { return static_cast<bool>(derivative_); }

    /// Flags fields whose samples are not exact (nearest-neighbour clouds).
    bool approximate() const noexcept { return approximate_; }
    FormField& set_approximate(bool a) {
        approximate_ = a;
        return *this;
    }

    AlternatingTensor sample(const Point& x) const {
        if (x.size() != n_)
            throw ShapeError("sample point has dimension " + std::to_string(x.size()) + ", field lives on R^" +
                             std::to_string(n_));
        AlternatingTensor t = call(sampler_, x);
        if (t.dimension() != n_ || t.degree() != degree_)
            throw ShapeError("sampler returned a tensor of the wrong shape at " + detail::format_point(x));
        return t;
    }

    AlternatingTensor analytic_derivative(const Point& x) const {
        if (!derivative_) throw UnsupportedError("field has no analytic exterior derivative");
        AlternatingTensor t = call(derivative_, x);
        if (t.dimension() != n_ || t.degree() != degree_ + 1)
            throw ShapeError("analytic derivative has the wrong shape at " + detail::format_point(x));
        return t;
    }

private:
    AlternatingTensor call(const Sampler& s, const Point& x) const {
        if (lock_) {
            std::lock_guard guard(*lock_);
            return s(x);
        }
        return s(x);
    }

    int n_ = 0;
    int degree_ = 0;
    Sampler sampler_;
    Sampler derivative_;
    std::shared_ptr<std::mutex> lock_;
    bool approximate_ = false;
};

inline AlternatingTensor sample(const FormField& field, const Point& x) { return field.sample(x); }

/// Field whose components are given as scalar functions on increasing keys.
inline FormField field_from_components(int n, int degree,
                                       std::vector<std::pair<MultiIndex, std::function<double(const Point&)>>> comps,
                                       FormField::Sampler analytic_derivative = {}) {
    for (const auto& [I, f] : comps)
        if (I.dimension() != n || I.degree() != degree) throw ShapeError("component key " + I.key() + " mismatch");
    auto sampler = [n, degree, comps = std::move(comps)](const Point& x) {
        AlternatingTensor t(n, degree);
        for (const auto& [I, f] : comps) t.add(I, f(x));
        return t;
    };
    return FormField(n, degree, std::move(sampler), std::move(analytic_derivative));
}

}  // namespace fluxcalc

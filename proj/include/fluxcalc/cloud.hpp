#pragma once

// Point-indexed form samples ("data clouds") and the samplers answering from them.
//
// File layout:
//   {"n": 3, "degree": 1,
//    "samples": [{"point": [1.01, 1, 1], "components": {"[1]": 1.01, "[2]": 1.0, "[3]": 1.0}}, ...]}
// Component keys are JSON arrays written as strings; missing keys are 0.

#include "errors.hpp"
#include "field.hpp"
#include "tensor.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace fluxcalc {

struct CloudSample {
    Point point;
    AlternatingTensor components;
};

struct DataCloud {
    int n = 0;
    int degree = 0;
    std::vector<CloudSample> samples;
};

inline DataCloud cloud_from_json(const nlohmann::json& j) {
    DataCloud c;
    try {
        c.n = j.at("n").get<int>();
        c.degree = j.at("degree").get<int>();
        if (c.degree < 0 || c.degree > c.n)
            throw DegreeError("cloud degree " + std::to_string(c.degree) + " outside 0.." + std::to_string(c.n));
        for (const auto& s : j.at("samples")) {
            const auto coords = s.at("point").get<std::vector<double>>();
            if (static_cast<int>(coords.size()) != c.n)
                throw ShapeError("cloud sample point has " + std::to_string(coords.size()) + " coordinates, expected " +
                                 std::to_string(c.n));
            std::vector<std::pair<std::vector<int>, double>> raw;
            if (s.contains("components")) {
                for (const auto& [key, value] : s.at("components").items()) {
                    auto idx = nlohmann::json::parse(key).get<std::vector<int>>();
                    raw.emplace_back(std::move(idx), value.get<double>());
                }
            }
            c.samples.push_back({Eigen::Map<const Point>(coords.data(), c.n), antisymmetrize(c.n, c.degree, raw)});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ShapeError(std::string("malformed data cloud: ") + e.what());
    }
    return c;
}

inline DataCloud load_cloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open data cloud '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ShapeError("malformed data cloud '" + path + "': " + e.what());
    }
    return cloud_from_json(j);
}

inline nlohmann::json to_json(const DataCloud& c) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : c.samples) {
        nlohmann::json comps = nlohmann::json::object();
        for (const auto& [I, v] : s.components.nonzero_components()) comps[I.key()] = v;
        samples.push_back({{"point", std::vector<double>(s.point.data(), s.point.data() + s.point.size())},
                           {"components", comps}});
    }
    return {{"n", c.n}, {"degree", c.degree}, {"samples", samples}};
}

enum class CloudMatching { Exact, Nearest };

struct CloudMatchOptions {
    CloudMatching mode = CloudMatching::Exact;
    /// Per-coordinate absolute tolerance of exact matching.
    double tolerance = 1e-12;
    /// Largest accepted Euclidean distance to the nearest sample.
    double max_distance = std::numeric_limits<double>::infinity();
};

/// Sampler answering from a data cloud. Exact matching only answers at points
/// present in the cloud; nearest matching returns the closest sample and marks
/// the field approximate.
inline FormField field_from_cloud(DataCloud cloud, CloudMatchOptions opts = {}) {
    std::sort(cloud.samples.begin(), cloud.samples.end(),
              [](const CloudSample& a, const CloudSample& b) { return a.point[0] < b.point[0]; });
    auto data = std::make_shared<const DataCloud>(std::move(cloud));
    const int n = data->n;
    if (n == 0) throw ShapeError("data cloud on R^0");

    FormField::Sampler sampler;
    if (opts.mode == CloudMatching::Exact) {
        sampler = [data, tol = opts.tolerance](const Point& x) {
            const auto& s = data->samples;
            auto it = std::lower_bound(s.begin(), s.end(), x[0] - tol,
                                       [](const CloudSample& a, double v) { return a.point[0] < v; });
            for (; it != s.end() && it->point[0] <= x[0] + tol; ++it)
                if (((it->point - x).cwiseAbs().array() <= tol).all()) return it->components;
            throw SamplingError("data cloud has no sample at " + detail::format_point(x), x);
        };
    } else {
        sampler = [data, maxdist = opts.max_distance](const Point& x) {
            const CloudSample* best = nullptr;
            double bestd = std::numeric_limits<double>::infinity();
            for (const auto& s : data->samples) {
                const double d = (s.point - x).norm();
                if (d < bestd) {
                    bestd = d;
                    best = &s;
                }
            }
            if (!best || bestd > maxdist)
                throw SamplingError("data cloud has no sample within " + std::to_string(maxdist) +
                                        " of " + detail::format_point(x),
                                    x);
            return best->components;
        };
    }
    FormField f(n, data->degree, std::move(sampler));
    f.set_approximate(opts.mode == CloudMatching::Nearest);
    return f;
}

/// Samples a field at the given points, e.g. to produce a stencil cloud.
inline DataCloud sample_cloud(const FormField& field, const std::vector<Point>& points) {
    DataCloud c{field.dimension(), field.degree(), {}};
    for (const auto& p : points) c.samples.push_back({p, field.sample(p)});
    return c;
}

}  // namespace fluxcalc

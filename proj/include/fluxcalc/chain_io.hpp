#pragma once

// Chain files:
//   {"n": 2,
//    "boundary": false,
//    "terms": [{"coefficient": 1, "block": [[0, 1], [0, 1]], "map": "inclusion"},
//              {"coefficient": -1, "block": [[0, 1]],
//               "map": {"type": "affine", "matrix": [[1], [2]], "offset": [0, 0]}},
//              {"coefficient": 1, "block": [[0.5, 1], [0, 3]], "map": {"type": "polar", "center": [0, 0]}},
//              {"coefficient": 2, "point": [1, 2]}]}
// "boundary": true replaces the chain by its boundary. Named maps come from a
// ParametrizationRegistry; built-in chains are looked up by name
// ("unit-square", "unit-cube-boundary", ...).

#include "chains.hpp"
#include "errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace fluxcalc {

/// Named C^1 parametrizations usable from chain files.
class ParametrizationRegistry {
public:
    using Factory = std::function<SingularBlock(const Block& domain, int n, const nlohmann::json& params)>;

    void add(const std::string& name, Factory f) { factories_[name] = std::move(f); }
    bool contains(const std::string& name) const { return factories_.count(name) != 0; }

    SingularBlock make(const std::string& name, const Block& domain, int n, const nlohmann::json& params) const {
        auto it = factories_.find(name);
        if (it == factories_.end()) throw ShapeError("unknown parametrization '" + name + "'");
        return it->second(domain, n, params);
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : factories_) out.push_back(k);
        return out;
    }

    /// polar:      (r, theta) -> c + (r cos theta, r sin theta)                 k = 2, n = 2
    /// paraboloid: (u, v) -> (u, v, a (u^2 + v^2))                              k = 2, n = 3
    /// sphere:     (theta, phi) -> c + R (sin t cos p, sin t sin p, cos t)      k = 2, n = 3
    /// spherical:  (r, theta, phi) -> c + r (sin t cos p, sin t sin p, cos t)   k = 3, n = 3
    static ParametrizationRegistry builtin() {
        ParametrizationRegistry reg;
        auto centre = [](const nlohmann::json& p, int n) {
            Point c = Point::Zero(n);
            if (p.contains("center")) {
                auto v = p.at("center").get<std::vector<double>>();
                if (static_cast<int>(v.size()) != n) throw ShapeError("center has the wrong dimension");
                for (int i = 0; i < n; ++i) c[i] = v[static_cast<std::size_t>(i)];
            }
            return c;
        };
        auto expect = [](const std::string& name, const Block& d, int n, int k, int nn) {
            if (d.dimension() != k || n != nn)
                throw ShapeError(name + " maps a " + std::to_string(k) + "-block into R^" + std::to_string(nn));
        };
        reg.add("polar", [=](const Block& d, int n, const nlohmann::json& p) {
            expect("polar", d, n, 2, 2);
            const Point c = centre(p, 2);
            return SingularBlock::from_map(
                d, 2,
                [c](const Point& t) {
                    Point y(2);
                    y << c[0] + t[0] * std::cos(t[1]), c[1] + t[0] * std::sin(t[1]);
                    return y;
                },
                [](const Point& t) {
                    Matrix j(2, 2);
                    j << std::cos(t[1]), -t[0] * std::sin(t[1]), std::sin(t[1]), t[0] * std::cos(t[1]);
                    return j;
                },
                "polar");
        });
        reg.add("paraboloid", [=](const Block& d, int n, const nlohmann::json& p) {
            expect("paraboloid", d, n, 2, 3);
            const double a = p.value("a", 1.0);
            return SingularBlock::from_map(
                d, 3,
                [a](const Point& t) {
                    Point y(3);
                    y << t[0], t[1], a * (t[0] * t[0] + t[1] * t[1]);
                    return y;
                },
                [a](const Point& t) {
                    Matrix j(3, 2);
                    j << 1, 0, 0, 1, 2 * a * t[0], 2 * a * t[1];
                    return j;
                },
                "paraboloid");
        });
        reg.add("sphere", [=](const Block& d, int n, const nlohmann::json& p) {
            expect("sphere", d, n, 2, 3);
            const Point c = centre(p, 3);
            const double r = p.value("radius", 1.0);
            return SingularBlock::from_map(
                d, 3,
                [c, r](const Point& t) {
                    Point y(3);
                    y << std::sin(t[0]) * std::cos(t[1]), std::sin(t[0]) * std::sin(t[1]), std::cos(t[0]);
                    return Point(c + r * y);
                },
                [r](const Point& t) {
                    Matrix j(3, 2);
                    j << std::cos(t[0]) * std::cos(t[1]), -std::sin(t[0]) * std::sin(t[1]),
                        std::cos(t[0]) * std::sin(t[1]), std::sin(t[0]) * std::cos(t[1]), -std::sin(t[0]), 0.0;
                    return Matrix(r * j);
                },
                "sphere");
        });
        reg.add("spherical", [=](const Block& d, int n, const nlohmann::json& p) {
            expect("spherical", d, n, 3, 3);
            const Point c = centre(p, 3);
            return SingularBlock::from_map(
                d, 3,
                [c](const Point& t) {
                    Point y(3);
                    y << std::sin(t[1]) * std::cos(t[2]), std::sin(t[1]) * std::sin(t[2]), std::cos(t[1]);
                    return Point(c + t[0] * y);
                },
                {}, "spherical");
        });
        return reg;
    }

private:
    std::map<std::string, Factory> factories_;
};

namespace detail {

inline Block block_from_json(const nlohmann::json& j) {
    std::vector<Interval> iv;
    for (const auto& pair : j) {
        auto v = pair.get<std::vector<double>>();
        if (v.size() != 2) throw ShapeError("block intervals are [lo, hi] pairs");
        iv.push_back({v[0], v[1]});
    }
    return Block(std::move(iv));
}

inline Point point_from_json(const nlohmann::json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline Chain chain_from_json(const nlohmann::json& j,
                             const ParametrizationRegistry& registry = ParametrizationRegistry::builtin()) {
    try {
        const auto& terms = j.at("terms");
        if (terms.empty()) throw ShapeError("chain file has no terms");
        std::optional<int> n;
        if (j.contains("n")) n = j.at("n").get<int>();
        std::optional<Chain> chain;
        for (const auto& t : terms) {
            const int coef = t.value("coefficient", 1);
            SingularBlock sb;
            if (t.contains("point")) {
                sb = SingularBlock::point(detail::point_from_json(t.at("point")));
            } else {
                const Block dom = detail::block_from_json(t.at("block"));
                const int nn = n.value_or(dom.dimension());
                const auto& m = t.contains("map") ? t.at("map") : nlohmann::json("inclusion");
                const std::string type = m.is_string() ? m.get<std::string>() : m.at("type").get<std::string>();
                if (type == "inclusion") {
                    sb = SingularBlock::inclusion(dom, nn);
                } else if (type == "affine") {
                    const auto rows = m.at("matrix").get<std::vector<std::vector<double>>>();
                    const Point off = detail::point_from_json(m.at("offset"));
                    Matrix a(static_cast<Eigen::Index>(rows.size()), dom.dimension());
                    for (std::size_t r = 0; r < rows.size(); ++r) {
                        if (static_cast<int>(rows[r].size()) != dom.dimension())
                            throw ShapeError("affine matrix row " + std::to_string(r) + " has the wrong length");
                        for (int c = 0; c < dom.dimension(); ++c)
                            a(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
                    }
                    sb = SingularBlock::affine(dom, a, off);
                } else {
                    sb = registry.make(type, dom, nn, m.is_object() ? m : nlohmann::json::object());
                }
            }
            if (!chain) chain.emplace(sb.target_dimension(), sb.dimension());
            chain->add(coef, std::move(sb));
        }
        if (j.value("boundary", false)) return boundary(*chain);
        return *chain;
    } catch (const nlohmann::json::exception& e) {
        throw ShapeError(std::string("malformed chain: ") + e.what());
    }
}

/// Built-in chains: unit-interval, unit-square, unit-cube, each optionally
/// suffixed with "-boundary".
inline std::optional<Chain> builtin_chain(const std::string& name) {
    std::string base = name;
    bool take_boundary = false;
    const std::string suffix = "-boundary";
    if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
        base.resize(base.size() - suffix.size());
        take_boundary = true;
    }
    int k = 0;
    if (base == "unit-interval") k = 1;
    else if (base == "unit-square") k = 2;
    else if (base == "unit-cube") k = 3;
    else return std::nullopt;
    Chain c(SingularBlock::inclusion(Block(std::vector<Interval>(static_cast<std::size_t>(k), {0.0, 1.0}))));
    return take_boundary ? boundary(c) : c;
}

/// A chain from a built-in name or a JSON file path.
inline Chain load_chain(const std::string& name_or_path,
                        const ParametrizationRegistry& registry = ParametrizationRegistry::builtin()) {
    if (auto c = builtin_chain(name_or_path)) return *c;
    std::ifstream in(name_or_path);
    if (!in) throw Error("cannot open chain file '" + name_or_path + "' (and it is not a built-in chain)");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ShapeError("malformed chain file '" + name_or_path + "': " + e.what());
    }
    return chain_from_json(j, registry);
}

}  // namespace fluxcalc

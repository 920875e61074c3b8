#pragma once

// Subcommand implementations behind the fluxcalc tool. Each cmd_* takes the
// merged options and returns the JSON report; library errors propagate as
// exceptions and are turned into error reports by run().

#include <fluxcalc/fluxcalc.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace fluxcalc::cli {

using nlohmann::json;

/// Bad or inconsistent command-line input (exit code 2).
class UsageError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::string command;

    std::optional<std::string> form;
    std::optional<std::string> cloud;
    std::optional<std::string> dform;
    std::optional<int> degree;
    std::optional<int> dim;
    std::optional<std::string> chain;
    std::vector<double> at;
    std::vector<double> block;
    std::vector<double> eps_seq;
    std::optional<std::string> reference;
    std::optional<std::string> out;
    std::optional<std::string> config;
    bool timings = false;

    // tunables: flags > config file > defaults
    std::optional<double> eps;
    std::optional<int> subdiv;
    std::optional<double> rtol;
    std::optional<int> richardson;
    std::optional<std::string> match;
    std::optional<double> tol;
    std::optional<double> eps_outer;
    std::optional<double> eps_inner;
    std::optional<int> max_depth;
    std::optional<bool> analytic;
};

/// Fills tunables not given on the command line from a JSON config file.
inline void apply_config(Options& o, const json& cfg) {
    auto take = [&cfg](const char* key, auto& slot) {
        using T = typename std::remove_reference_t<decltype(slot)>::value_type;
        if (!slot && cfg.contains(key)) slot = cfg.at(key).get<T>();
    };
    take("eps", o.eps);
    take("subdiv", o.subdiv);
    take("rtol", o.rtol);
    take("richardson", o.richardson);
    take("match", o.match);
    take("tol", o.tol);
    take("eps_outer", o.eps_outer);
    take("eps_inner", o.eps_inner);
    take("max_depth", o.max_depth);
    take("analytic", o.analytic);
}

namespace detail {

inline json to_json(const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

inline json to_json(const AlternatingTensor& t) {
    json comps = json::object();
    for (const auto& [I, v] : t.components()) comps[I.key()] = v;
    return {{"degree", t.degree()}, {"components", comps}};
}

inline json to_json(const Block& b) {
    json out = json::array();
    for (const auto& iv : b.intervals()) out.push_back({iv.lo, iv.hi});
    return out;
}

inline Point point_of(const std::vector<double>& v) {
    return Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline AlternatingTensor tensor_from_json(const json& j, int n) {
    const int degree = j.at("degree").get<int>();
    std::vector<std::pair<std::vector<int>, double>> raw;
    for (const auto& [key, value] : j.at("components").items())
        raw.emplace_back(json::parse(key).get<std::vector<int>>(), value.get<double>());
    return antisymmetrize(n, degree, raw);
}

struct LoadedField {
    FormField field;
    json source;
    std::vector<std::string> warnings;
};

/// The field named by --form or --cloud on R^n. `degree` may be empty when
/// the expression (or cloud) determines it.
inline LoadedField load_field(const Options& o, int n, std::optional<int> degree) {
    if (o.form.has_value() == o.cloud.has_value()) throw UsageError("give exactly one of --form or --cloud");
    if (o.degree) {
        if (degree && *degree != *o.degree)
            throw UsageError("--degree " + std::to_string(*o.degree) + " conflicts with the required degree " +
                             std::to_string(*degree));
        degree = o.degree;
    }
    LoadedField lf;
    if (o.form) {
        FormExpression fe = degree ? parse_form(*o.form, n, *degree) : parse_form(*o.form, n);
        FormField::Sampler d;
        if (o.dform) {
            if (fe.degree() + 1 > n) throw UsageError("--dform given for a top-degree form");
            auto de = std::make_shared<FormExpression>(parse_form(*o.dform, n, fe.degree() + 1));
            for (const auto& w : de->warnings()) lf.warnings.push_back("dform: " + w);
            d = [de](const Point& x) { return de->evaluate(x); };
        }
        lf.field = fe.to_field(d);
        lf.source = {{"form", *o.form}, {"canonical", fe.to_string()}};
        if (o.dform) lf.source["dform"] = *o.dform;
        for (const auto& w : fe.warnings()) lf.warnings.push_back(w);
    } else {
        DataCloud cloud = load_cloud(*o.cloud);
        if (cloud.n != n)
            throw UsageError("data cloud lives on R^" + std::to_string(cloud.n) + ", command needs R^" +
                             std::to_string(n));
        if (degree && cloud.degree != *degree)
            throw UsageError("data cloud has degree " + std::to_string(cloud.degree) + ", command needs degree " +
                             std::to_string(*degree));
        CloudMatchOptions mo;
        const std::string mode = o.match.value_or("exact");
        if (mode == "exact") {
            mo.mode = CloudMatching::Exact;
            if (o.tol) mo.tolerance = *o.tol;
        } else if (mode == "nearest") {
            mo.mode = CloudMatching::Nearest;
            if (o.tol) mo.max_distance = *o.tol;
        } else {
            throw UsageError("--match must be exact or nearest");
        }
        lf.field = field_from_cloud(std::move(cloud), mo);
        lf.source = {{"cloud", *o.cloud}, {"match", mode}};
        if (mo.mode == CloudMatching::Nearest)
            lf.warnings.push_back("nearest-sample matching is approximate; results are not exact-stencil values");
    }
    return lf;
}

inline int resolve_dim(const Options& o, int inferred) {
    if (o.dim && *o.dim != inferred)
        throw UsageError("--dim " + std::to_string(*o.dim) + " conflicts with the inferred dimension " +
                         std::to_string(inferred));
    if (inferred < 1) throw UsageError("ambient dimension must be at least 1");
    return inferred;
}

inline int point_dim(const Options& o) {
    if (o.at.empty()) throw UsageError("--at is required");
    return resolve_dim(o, static_cast<int>(o.at.size()));
}

/// --subdiv sets face subdivisions only where no quadrature is involved.
inline DerivConfig deriv_config(const Options& o, bool subdiv_is_faces) {
    DerivConfig c;
    c.eps = o.eps;
    if (o.subdiv && subdiv_is_faces) c.face_subdivisions = *o.subdiv;
    if (o.richardson) c.richardson_levels = *o.richardson;
    c.validate();
    return c;
}

inline QuadratureSpec quadrature(const Options& o) {
    QuadratureSpec q;
    if (o.subdiv) q.subdivisions = *o.subdiv;
    if (o.rtol) q.rtol = *o.rtol;
    if (q.subdivisions < 1) throw UsageError("--subdiv must be at least 1");
    return q;
}

inline json cloud_config(const Options& o) {
    json c = json::object();
    if (o.cloud) {
        c["match"] = o.match.value_or("exact");
        if (o.tol) c["tol"] = *o.tol;
        else if (c["match"] == "exact") c["tol"] = 1e-12;
    }
    return c;
}

inline json config_of(const Options& o, const DerivConfig& d, const Point& x) {
    json c = cloud_config(o);
    c["eps"] = d.eps_at(x);
    c["face_subdivisions"] = d.face_subdivisions;
    c["richardson"] = d.richardson_levels;
    return c;
}

inline json config_of(const Options& o, const QuadratureSpec& q) {
    json c = cloud_config(o);
    c["subdiv"] = q.subdivisions;
    c["rtol"] = q.rtol;
    return c;
}

inline json base_report(const Options& o, json inputs, json config) {
    inputs["config"] = std::move(config);
    return {{"command", o.command}, {"version", kVersion}, {"inputs", std::move(inputs)}};
}

inline void attach_warnings(json& report, const std::vector<std::string>& w) {
    if (!w.empty()) report["warnings"] = w;
}

}  // namespace detail

/// derive: D omega at a point on the canonical directions.
inline json cmd_derive(const Options& o) {
    const int n = detail::point_dim(o);
    auto lf = detail::load_field(o, n, std::nullopt);
    const Point x = detail::point_of(o.at);
    DerivConfig cfg = detail::deriv_config(o, true);
    json inputs = lf.source;
    inputs["at"] = o.at;
    inputs["degree"] = lf.field.degree();
    json report = detail::base_report(o, inputs, detail::config_of(o, cfg, x));
    if (cfg.richardson_levels > 0) {
        const RefinedDerivative r = exterior_derivative_refined(lf.field, x, cfg);
        report["outputs"] = detail::to_json(r.value);
        report["outputs"]["error_estimate"] = r.error_estimate;
        report["outputs"]["reliable"] = r.reliable;
        if (r.observed_order) report["outputs"]["observed_order"] = *r.observed_order;
        if (!r.reliable)
            lf.warnings.push_back("observed order deviates from 2 by more than 0.5; refinement unreliable");
    } else {
        report["outputs"] = detail::to_json(exterior_derivative_at(lf.field, x, cfg));
    }
    detail::attach_warnings(report, lf.warnings);
    return report;
}

/// integrate: integral of a form over a chain.
inline json cmd_integrate(const Options& o) {
    if (!o.chain) throw UsageError("--chain is required");
    const Chain c = load_chain(*o.chain);
    const int n = detail::resolve_dim(o, c.target_dimension());
    auto lf = detail::load_field(o, n, c.dimension());
    const QuadratureSpec q = detail::quadrature(o);
    const QuadratureResult r = integrate_over_chain_report(lf.field, c, q);
    json inputs = lf.source;
    inputs["chain"] = *o.chain;
    json report = detail::base_report(o, inputs, detail::config_of(o, q));
    report["outputs"] = {{"value", r.value}, {"subdivisions", r.subdivisions}, {"converged", r.converged}};
    if (!r.converged) lf.warnings.push_back("quadrature did not reach --rtol before the subdivision cap");
    detail::attach_warnings(report, lf.warnings);
    return report;
}

/// stokes: boundary integral against the integral of D omega.
inline json cmd_stokes(const Options& o) {
    if (!o.chain) throw UsageError("--chain is required");
    const Chain c = load_chain(*o.chain);
    if (c.dimension() < 1) throw UsageError("stokes needs a chain of dimension >= 1");
    const int n = detail::resolve_dim(o, c.target_dimension());
    auto lf = detail::load_field(o, n, c.dimension() - 1);
    const QuadratureSpec q = detail::quadrature(o);
    DerivConfig cfg = detail::deriv_config(o, false);
    StokesOptions so;
    so.use_analytic_derivative = o.analytic.value_or(false);
    if (so.use_analytic_derivative && !lf.field.has_analytic_derivative())
        throw UsageError("--analytic needs --dform");
    const StokesReport r = stokes_residual(lf.field, c, cfg, q, so);
    json inputs = lf.source;
    inputs["chain"] = *o.chain;
    json config = detail::config_of(o, q);
    config["eps"] = cfg.eps ? json(*cfg.eps) : json("1e-4*max(1,|x|_inf), capped near the boundary");
    config["analytic"] = so.use_analytic_derivative;
    json report = detail::base_report(o, inputs, config);
    report["outputs"] = {{"lhs", r.lhs}, {"rhs", r.rhs}, {"residual", r.residual}};
    detail::attach_warnings(report, lf.warnings);
    return report;
}

/// mvt: mean-value point of the average boundary flux over a block.
inline json cmd_mvt(const Options& o) {
    if (o.block.empty() || o.block.size() % 2 != 0) throw UsageError("--block needs pairs a1,b1,...,ak,bk");
    std::vector<Interval> iv;
    for (std::size_t i = 0; i < o.block.size(); i += 2) iv.push_back({o.block[i], o.block[i + 1]});
    const Block b(std::move(iv));
    const int n = detail::resolve_dim(o, b.dimension());
    auto lf = detail::load_field(o, n, n - 1);
    const QuadratureSpec q = detail::quadrature(o);
    DerivConfig cfg = detail::deriv_config(o, false);
    MvtOptions mo;
    if (o.max_depth) mo.max_depth = *o.max_depth;
    const MvtResult r = mvt_locate(lf.field, b, cfg, q, mo);
    json inputs = lf.source;
    inputs["block"] = detail::to_json(b);
    json config = detail::config_of(o, q);
    config["max_depth"] = mo.max_depth;
    config["eps"] = cfg.eps ? json(*cfg.eps) : json("1e-4*max(1,|xi|_inf)");
    json report = detail::base_report(o, inputs, config);
    json levels = json::array();
    for (const auto& l : r.levels) levels.push_back({{"block", detail::to_json(l.block)}, {"average", l.average}});
    report["outputs"] = {{"xi", detail::to_json(r.xi)}, {"lhs", r.attained},   {"rhs", r.target},
                         {"residual", r.residual},      {"depth", r.depth},    {"levels", levels}};
    detail::attach_warnings(report, lf.warnings);
    return report;
}

/// dsq: max-norm of D(D omega) at a point.
inline json cmd_dsq(const Options& o) {
    const int n = detail::point_dim(o);
    auto lf = detail::load_field(o, n, std::nullopt);
    const Point x = detail::point_of(o.at);
    DSquaredConfig cfg;
    cfg.outer.eps = o.eps_outer.value_or(1e-3);
    cfg.inner.eps = o.eps_inner.value_or(1e-4);
    if (o.subdiv) cfg.outer.face_subdivisions = cfg.inner.face_subdivisions = *o.subdiv;
    const double r = d_squared_residual(lf.field, x, cfg);
    json inputs = lf.source;
    inputs["at"] = o.at;
    json config = detail::cloud_config(o);
    config["eps_outer"] = *cfg.outer.eps;
    config["eps_inner"] = *cfg.inner.eps;
    config["face_subdivisions"] = cfg.outer.face_subdivisions;
    json report = detail::base_report(o, inputs, config);
    report["outputs"] = {{"lhs", r}, {"rhs", 0.0}, {"residual", r}};
    detail::attach_warnings(report, lf.warnings);
    return report;
}

/// convergence: empirical order of the stencil over an eps sequence.
inline json cmd_convergence(const Options& o) {
    const int n = detail::point_dim(o);
    auto lf = detail::load_field(o, n, std::nullopt);
    const Point x = detail::point_of(o.at);
    std::vector<double> seq = o.eps_seq;
    if (seq.empty()) seq = {1e-1, 5e-2, 2.5e-2, 1.25e-2};
    DerivConfig cfg = detail::deriv_config(o, true);
    AlternatingTensor reference;
    std::string ref_kind;
    if (o.reference) {
        json j;
        std::ifstream in(*o.reference);
        j = in ? json::parse(in) : json::parse(*o.reference);
        reference = detail::tensor_from_json(j, n);
        ref_kind = "given";
    } else if (lf.field.has_analytic_derivative()) {
        reference = lf.field.analytic_derivative(x);
        ref_kind = "analytic";
    } else {
        DerivConfig rc = cfg;
        rc.eps = seq.back();
        rc.richardson_levels = std::max(2, cfg.richardson_levels);
        reference = exterior_derivative_refined(lf.field, x, rc).value;
        ref_kind = "richardson";
    }
    const ConvergenceResult r = convergence_order(lf.field, x, seq, reference, cfg);
    json inputs = lf.source;
    inputs["at"] = o.at;
    inputs["reference_kind"] = ref_kind;
    json config = detail::cloud_config(o);
    config["eps_seq"] = seq;
    config["face_subdivisions"] = cfg.face_subdivisions;
    json report = detail::base_report(o, inputs, config);
    report["outputs"] = {{"reference", detail::to_json(reference)}, {"errors", r.errors}};
    if (r.exact()) report["outputs"]["order"] = "exact";
    else report["outputs"]["order"] = *r.slope;
    detail::attach_warnings(report, lf.warnings);
    return report;
}

struct RunResult {
    int exit_code = 0;
    json report;
};

/// Dispatches a command and maps library errors to exit codes:
/// 2 usage/parse, 3 sampling, 4 bracketing, 1 anything else.
inline RunResult run(Options o) {
    RunResult rr;
    const auto start = std::chrono::steady_clock::now();
    auto error_report = [&](const char* kind, const std::exception& e) {
        return json{{"command", o.command}, {"version", kVersion}, {"error", {{"kind", kind}, {"message", e.what()}}}};
    };
    try {
        if (o.config) {
            std::ifstream in(*o.config);
            if (!in) throw UsageError("cannot open config file '" + *o.config + "'");
            json cfg;
            try {
                cfg = json::parse(in);
                apply_config(o, cfg);
            } catch (const json::exception& e) {
                throw UsageError(std::string("malformed config file: ") + e.what());
            }
        }
        if (o.command == "derive") rr.report = cmd_derive(o);
        else if (o.command == "integrate") rr.report = cmd_integrate(o);
        else if (o.command == "stokes") rr.report = cmd_stokes(o);
        else if (o.command == "mvt") rr.report = cmd_mvt(o);
        else if (o.command == "dsq") rr.report = cmd_dsq(o);
        else if (o.command == "convergence") rr.report = cmd_convergence(o);
        else throw UsageError("unknown command '" + o.command + "'");
        if (o.timings) {
            const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
            rr.report["timings"] = {{"total_ms", ms.count()}};
        }
    } catch (const UsageError& e) {
        rr = {2, error_report("usage", e)};
    } catch (const ParseError& e) {
        rr = {2, error_report("parse", e)};
        rr.report["error"]["line"] = e.line();
        rr.report["error"]["column"] = e.column();
    } catch (const SamplingError& e) {
        rr = {3, error_report("sampling", e)};
        rr.report["error"]["point"] = detail::to_json(e.point());
    } catch (const BracketingError& e) {
        rr = {4, error_report("bracketing", e)};
        rr.report["error"]["depth"] = e.depth();
    } catch (const Error& e) {
        rr = {1, error_report("library", e)};
        if (!o.at.empty()) rr.report["error"]["point"] = o.at;
    } catch (const json::exception& e) {
        rr = {2, error_report("usage", e)};
    } catch (const std::exception& e) {
        rr = {1, error_report("internal", e)};
        if (!o.at.empty()) rr.report["error"]["point"] = o.at;
    }
    return rr;
}

}  // namespace fluxcalc::cli

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "commands.hpp"

#include <fluxcalc/fluxcalc.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace fluxcalc;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Check {
public:
    void require(bool ok, const std::string& what) {
        if (!ok && out_.pass) out_.detail = what;
        out_.pass = out_.pass && ok;
    }
    void note(const std::string& s) {
        if (out_.pass) out_.detail = s;
    }
    Outcome result() const { return out_; }

private:
    Outcome out_;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

Point pt(std::initializer_list<double> v) {
    Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

FormField form(const std::string& text, int n, int degree, const std::string& dtext = {}) {
    if (dtext.empty()) return parse_form(text, n, degree).to_field();
    const auto d = parse_form(dtext, n, degree + 1);
    return parse_form(text, n, degree).to_field([d](const Point& x) { return d.evaluate(x); });
}

QuadratureSpec subdiv(int m) {
    QuadratureSpec q;
    q.subdivisions = m;
    return q;
}

std::string samples(const char* name) { return std::string(FLUXCALC_SAMPLES_DIR) + "/" + name; }

Outcome radial_cloud() {
    Check c;
    cli::Options o;
    o.command = "derive";
    o.cloud = samples("radial.json");
    o.at = {1, 1, 1};
    o.degree = 1;
    o.eps = 0.01;
    const auto r = cli::run(o);
    c.require(r.exit_code == 0, "derive failed: " + r.report.dump());
    if (r.exit_code != 0) return c.result();
    const auto& comps = r.report["outputs"]["components"];
    c.require(comps.size() == 3, "expected three components");
    double worst = 0;
    for (const auto& [k, v] : comps.items()) worst = std::max(worst, std::abs(v.get<double>()));
    c.require(worst <= 1e-12, "max |component| " + fmt(worst));
    c.note("max |component| " + fmt(worst));
    return c.result();
}

Outcome x_dydz_cloud() {
    Check c;
    cli::Options o;
    o.command = "derive";
    o.cloud = samples("x_dydz.json");
    o.at = {1, 2, 3};
    o.degree = 2;
    o.eps = 0.01;
    const auto r = cli::run(o);
    c.require(r.exit_code == 0, "derive failed: " + r.report.dump());
    if (r.exit_code != 0) return c.result();
    const auto& out = r.report["outputs"];
    c.require(out["degree"] == 3, "degree is not 3");
    c.require(out["components"].size() == 1 && out["components"].contains("[1,2,3]"), "unexpected keys");
    const double v = out["components"]["[1,2,3]"].get<double>();
    c.require(std::abs(v - 1.0) <= 1e-10, "component [1,2,3] = " + fmt(v));
    c.note("[1,2,3] = " + nlohmann::json(v).dump());
    return c.result();
}

Outcome heaviside() {
    Check c;
    const auto w = form("(sin(x1) + step(x2))*dx2", 2, 1);
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-1, 1), side(0.05, 1);
    double worst = 0;
    for (int rep = 0; rep < 20; ++rep) {
        Point x(2), h(2);
        do {
            x << u(rng), u(rng);
            h << side(rng), side(rng);
        } while (x[0] + h[0] > 1 || x[1] + h[1] > 1);
        const double got = boundary_integral(w, SingularBlock::inclusion(Block::from_corner(x, h)), subdiv(64));
        const double want = h[1] * (std::sin(x[0] + h[0]) - std::sin(x[0]));
        worst = std::max(worst, std::abs(got - want));
    }
    c.require(worst <= 1e-8, "max error " + fmt(worst));
    c.note("max error " + fmt(worst) + " over 20 rectangles");
    return c.result();
}

// Random chains of dimension k in R^n: affine maps, a curved map without an
// explicit Jacobian, and the sphere parametrization.
Chain random_chain(std::mt19937_64& rng, int variant) {
    std::uniform_real_distribution<double> u(-1, 1);
    std::uniform_int_distribution<int> coef(-3, 3);
    auto block = [&](int k) {
        std::vector<Interval> iv;
        for (int i = 0; i < k; ++i) {
            const double a = u(rng);
            iv.push_back({a, a + 0.2 + std::abs(u(rng))});
        }
        return Block(iv);
    };
    const int k = 2 + variant % 3;
    const int n = k + variant % 2;
    Chain ch(n, k);
    for (int t = 0; t < 2; ++t) {
        int a = coef(rng);
        if (a == 0) a = 1;
        const Block b = block(k);
        switch (variant % 4) {
            case 0:
            case 1: {
                Matrix A(n, k);
                for (int r = 0; r < n; ++r)
                    for (int s = 0; s < k; ++s) A(r, s) = u(rng);
                Point off(n);
                for (int r = 0; r < n; ++r) off[r] = u(rng);
                ch.add(a, SingularBlock::affine(b, A, off));
                break;
            }
            case 2: {
                Matrix A(n, k);
                for (int r = 0; r < n; ++r)
                    for (int s = 0; s < k; ++s) A(r, s) = u(rng);
                ch.add(a, SingularBlock::from_map(b, n, [A, n, k](const Point& s) {
                    Point y = A * s;
                    for (int r = 0; r < n; ++r) y[r] += 0.3 * std::sin(s[r % k] * s[(r + 1) % k]);
                    return y;
                }));
                break;
            }
            default: {
                if (k == 2 && n == 3) {
                    nlohmann::json p{{"radius", 1.0 + 0.5 * std::abs(u(rng))}};
                    ch.add(a, ParametrizationRegistry::builtin().make("sphere", b, 3, p));
                } else {
                    ch.add(a, SingularBlock::from_map(b, n, [n, k](const Point& s) {
                        Point y = Point::Zero(n);
                        for (int r = 0; r < n; ++r) y[r] = s[r % k] + 0.2 * s[(r + 1) % k] * s[(r + 1) % k];
                        return y;
                    }));
                }
            }
        }
    }
    return ch;
}

FormField random_form(std::mt19937_64& rng, int n, int p) {
    std::uniform_real_distribution<double> u(-2, 2);
    std::ostringstream s;
    s.precision(17);
    bool first = true;
    for (const auto& I : enumerate(n, p)) {
        const int i = 1 + static_cast<int>(I.lex_rank() % static_cast<std::size_t>(n));
        const int j = 1 + static_cast<int>((I.lex_rank() + 1) % static_cast<std::size_t>(n));
        if (!first) s << " + ";
        first = false;
        s << "(" << u(rng) << "*sin(x" << i << ") + " << u(rng) << "*x" << j << "^2*exp(" << 0.3 * u(rng) << "*x"
          << i << "))";
        for (int q = 0; q < p; ++q) s << (q ? "^dx" : "*dx") << I[static_cast<std::size_t>(q)];
    }
    return form(s.str(), n, p);
}

Outcome boundary_squared() {
    Check c;
    std::mt19937_64 rng(202);
    double worst = 0;
    for (int rep = 0; rep < 25; ++rep) {
        const Chain ch = random_chain(rng, rep);
        const Chain bb = boundary(boundary(ch));
        const auto w = random_form(rng, ch.target_dimension(), ch.dimension() - 2);
        const auto q = subdiv(6);
        const double total = integrate_over_chain(w, bb, q);
        double scale = 0;
        for (const auto& t : bb.terms()) scale += std::abs(t.coefficient * integrate_over_singular_block(w, t.block, q));
        const double ratio = std::abs(total) / (1 + scale);
        worst = std::max(worst, ratio);
        c.require(std::abs(total) <= 1e-9 * (1 + scale),
                  "chain " + std::to_string(rep) + ": |integral| " + fmt(std::abs(total)) + ", scale " + fmt(scale));
    }
    c.note("max |integral|/(1+scale) " + fmt(worst) + " over 25 chains");
    return c.result();
}

struct CompatCase {
    const char* form;
    const char* dform;
    int n;
    int degree;
    Point at;
};

Outcome compatibility() {
    Check c;
    const std::vector<CompatCase> corpus{
        {"x1^3*dx2", "3*x1^2*dx1^dx2", 2, 1, pt({1, 0.5})},
        {"sin(x1)*dx2", "cos(x1)*dx1^dx2", 2, 1, pt({1, 1})},
        {"exp(x2)*dx1", "-exp(x2)*dx1^dx2", 2, 1, pt({0.3, 0.7})},
        {"x1^2*x2^3*dx1 + x1^4*dx2", "(4*x1^3 - 3*x1^2*x2^2)*dx1^dx2", 2, 1, pt({0.8, -0.6})},
        {"sin(x1*x2)*dx3", "x2*cos(x1*x2)*dx1^dx3 + x1*cos(x1*x2)*dx2^dx3", 3, 1, pt({0.5, 1.2, -0.3})},
        {"x3^3*x2*dx1", "-x3^3*dx1^dx2 - 3*x2*x3^2*dx1^dx3", 3, 1, pt({0.1, 0.9, 1.3})},
        {"x1^3*dx2^dx3 - sin(x2)*dx1^dx3 + exp(x3)*dx1^dx2", "(3*x1^2 + cos(x2) + exp(x3))*dx1^dx2^dx3", 3, 2,
         pt({0.7, 0.4, 0.2})},
        {"sin(x1)*exp(x2)", "cos(x1)*exp(x2)*dx1 + sin(x1)*exp(x2)*dx2", 2, 0, pt({0.6, 0.1})},
        {"cos(x1 + x2)*dx1 - x1^3*x2*dx2", "(sin(x1 + x2) - 3*x1^2*x2)*dx1^dx2", 2, 1, pt({0.9, 0.4})},
        {"x1^3*x4*dx2 + sin(x3)*x2*dx4", "3*x1^2*x4*dx1^dx2 + (sin(x3) - x1^3)*dx2^dx4 + x2*cos(x3)*dx3^dx4", 4, 1,
         pt({1.1, -0.5, 0.8, 0.6})},
    };
    const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125};
    double worst_slope = 0, worst_fit = 0;
    for (const auto& cs : corpus) {
        const auto w = form(cs.form, cs.n, cs.degree, cs.dform);
        const auto ref = w.analytic_derivative(cs.at);
        const auto r = convergence_order(w, cs.at, eps, ref);
        if (r.exact()) {
            c.require(false, std::string(cs.form) + ": no error to fit");
            continue;
        }
        // least-squares C in err = C eps^2
        double num = 0, den = 0;
        for (std::size_t i = 0; i < eps.size(); ++i) {
            num += r.errors[i] * eps[i] * eps[i];
            den += std::pow(eps[i], 4);
        }
        const double C = num / den;
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const double fit = std::abs(r.errors[i] / (C * eps[i] * eps[i]) - 1.0);
            worst_fit = std::max(worst_fit, fit);
            c.require(r.errors[i] <= 1.25 * C * eps[i] * eps[i],
                      std::string(cs.form) + ": error " + fmt(r.errors[i]) + " above " + fmt(1.25 * C) + "*eps^2");
        }
        worst_slope = std::max(worst_slope, std::abs(*r.slope - 2.0));
        c.require(std::abs(*r.slope - 2.0) <= 0.2, std::string(cs.form) + ": slope " + fmt(*r.slope));
    }
    c.note("max |slope-2| " + fmt(worst_slope) + ", max deviation from fitted C*eps^2 " + fmt(100 * worst_fit) + "%");
    return c.result();
}

Outcome stokes() {
    Check c;
    DerivConfig cfg;
    cfg.eps = 1e-4;
    const auto q = subdiv(256);
    const auto green = stokes_residual(form("-x2*dx1 + x1*dx2", 2, 1), load_chain("unit-square"), cfg, q);
    c.require(std::abs(green.lhs - 2) <= 1e-6 && std::abs(green.rhs - 2) <= 1e-6,
              "Green: lhs " + fmt(green.lhs) + ", rhs " + fmt(green.rhs));

    struct Case {
        const char* form;
        int n;
        std::string chain;
    };
    const nlohmann::json paraboloid = nlohmann::json::parse(
        R"({"n":3,"terms":[{"coefficient":1,"block":[[-0.5,1],[0,1]],"map":{"type":"paraboloid","a":0.5}}]})");
    const nlohmann::json sphere = nlohmann::json::parse(
        R"({"n":3,"terms":[{"coefficient":1,"block":[[0.3,1.2],[0.5,2.5]],"map":{"type":"sphere","radius":1.5}}]})");
    const std::vector<Case> cases{
        {"x1^2*x2*dx2 + sin(x2)*dx1", 2, samples("annulus_sector.json")},
        {"exp(x1)*cos(x2)*dx2 - x1*x2^2*dx1", 2, samples("sheared_square.json")},
        {"sin(x1*x2)*dx1 + x1^3*dx2", 2, samples("square_minus_square.json")},
        {"x2*x3*dx1 + x1^2*dx3 - cos(x3)*dx2", 3, paraboloid.dump()},
        {"x3*dx1 + x1*x2*dx2 + exp(x1)*dx3", 3, sphere.dump()},
    };
    double worst = 0;
    for (const auto& cs : cases) {
        const Chain ch = cs.chain.front() == '{' ? chain_from_json(nlohmann::json::parse(cs.chain)) : load_chain(cs.chain);
        const auto r = stokes_residual(form(cs.form, cs.n, 1), ch, cfg, q);
        const double rel = r.residual / std::max(std::abs(r.lhs), 1e-300);
        worst = std::max(worst, rel);
        c.require(rel < 1e-5, std::string(cs.form) + ": relative residual " + fmt(rel));
    }
    c.note("Green residual " + fmt(green.residual) + ", max relative residual " + fmt(worst) + " over 5 cases");
    return c.result();
}

Outcome d_squared() {
    Check c;
    const std::vector<std::pair<const char*, Point>> forms{
        {"sin(x1)*x2*dx3", pt({0.3, 0.4, 0.5})},
        {"sin(x1*x2)*x3*dx3 + exp(x1)*x2^3*dx1", pt({0.5, -0.3, 0.8})},
        {"sin(x2)*x3*dx1 - cos(x1)*x2*dx2", pt({1.0, 0.2, -0.7})},
        {"exp(x3)*x1*dx2 + x2^3*sin(x3)*dx1", pt({-0.4, 0.6, 0.1})},
        {"x1^3*x3*dx2 + sin(x1*x2)*dx3", pt({0.7, 0.9, 0.3})},
    };
    double worst = 0;
    for (const auto& [text, x] : forms) {
        const auto w = form(text, 3, 1);
        const double r0 = d_squared_residual(w, x);
        worst = std::max(worst, r0);
        c.require(r0 <= 1e-4, std::string(text) + ": residual " + fmt(r0) + " at defaults");
        double prev = std::numeric_limits<double>::infinity();
        for (double s : {4.0, 2.0, 1.0}) {
            DSquaredConfig cfg;
            cfg.outer.eps = s * 1e-2;
            cfg.inner.eps = s * 1e-3;
            const double r = d_squared_residual(w, x, cfg);
            c.require(r < prev, std::string(text) + ": sweep not decreasing at eps_inner " + fmt(s * 1e-3));
            prev = r;
        }
    }
    c.note("max residual at defaults " + fmt(worst));
    return c.result();
}

Outcome mean_value() {
    Check c;
    const auto r2 = mvt_locate(form("x1^2*dx2", 2, 1), Block{{0, 1}, {0, 1}});
    c.require(std::abs(r2.xi[0] - 0.5) <= 1e-3, "xi_1 = " + fmt(r2.xi[0]));
    c.require(r2.residual < 1e-6, "residual " + fmt(r2.residual));
    const auto r1 = mvt_locate(form("x1^2", 1, 0), Block{{0, 2}});
    c.require(std::abs(r1.xi[0] - 1.0) <= 1e-6, "xi = " + fmt(r1.xi[0]));
    double worst = 0;
    for (const auto* r : {&r2, &r1})
        for (const auto& level : r->levels) worst = std::max(worst, std::abs(level.average - r->target));
    c.require(worst <= 1e-10, "trisection mismatch " + fmt(worst));
    c.note("xi_1 = " + fmt(r2.xi[0]) + ", xi = " + nlohmann::json(r1.xi[0]).dump() + ", max level mismatch " +
           fmt(worst));
    return c.result();
}

Outcome almost_constant() {
    Check c;
    FormField w(3, 1, [](const Point& x) {
        AlternatingTensor t(3, 1);
        const bool origin = x.isZero(0.0);
        t.set(MultiIndex(3, {1}), origin ? 5.0 : 1.0);
        t.set(MultiIndex(3, {2}), origin ? 5.0 : -2.0);
        t.set(MultiIndex(3, {3}), origin ? 5.0 : 0.5);
        return t;
    });
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> u(-1e-2, 1e-2);
    DerivConfig cfg;
    cfg.eps = 1e-3;
    int centres = 0;
    while (centres < 100) {
        const Point x = pt({u(rng), u(rng), u(rng)});
        bool hits = false;
        for (const auto& p : stencil_points(x, *cfg.eps)) hits = hits || p.isZero(0.0);
        if (hits) continue;
        ++centres;
        for (const auto& [I, v] : exterior_derivative_at(w, x, cfg).components())
            c.require(v == 0.0, "nonzero component " + I.key() + " = " + fmt(v));
    }
    c.note("100 centres, all components exactly 0");
    return c.result();
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "radial 1-form from a sampled cloud", 1, radial_cloud},
        {2, "x dy^dz from a sampled cloud", 1, x_dydz_cloud},
        {3, "Heaviside boundary flux closed form", 5, heaviside},
        {4, "boundary of boundary integrates to zero", 30, boundary_squared},
        {5, "stencil D matches analytic d at order 2", 30, compatibility},
        {6, "Green and Stokes residuals", 60, stokes},
        {7, "D^2 residual and sweep", 60, d_squared},
        {8, "mean-value point and trisection invariant", 30, mean_value},
        {9, "constant form off the origin", 5, almost_constant},
    };
    int failures = 0;
    for (const auto& cr : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < cr.limit_s;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s  %d  %-45s %7.3fs / %gs  %s%s\n", pass ? "PASS" : "FAIL", cr.id, cr.name, secs, cr.limit_s,
                    o.detail.c_str(), in_time ? "" : "  (over time limit)");
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}

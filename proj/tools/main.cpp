#include "commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using fluxcalc::cli::Options;

void add_field_options(CLI::App* app, Options& o) {
    app->add_option("--form", o.form, "form expression, e.g. \"x1*dx2^dx3\"");
    app->add_option("--cloud", o.cloud, "data cloud JSON file");
    app->add_option("--dform", o.dform, "analytic exterior derivative expression (optional)");
    app->add_option("--degree", o.degree, "degree of the input form");
    app->add_option("--dim", o.dim, "ambient dimension (checked against the inferred one)");
    app->add_option("--match", o.match, "cloud matching: exact (default) or nearest");
    app->add_option("--tol", o.tol, "exact: coordinate tolerance; nearest: max distance");
}

void add_common(CLI::App* app, Options& o) {
    app->add_option("--out", o.out, "also write the report to this file");
    app->add_option("--config", o.config, "JSON config file (flags take precedence)");
    app->add_flag("--timings", o.timings, "include wall-clock timings in the report");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fluxcalc: exterior derivatives as boundary flux, integration over chains, and checks of "
                 "Stokes, D^2 = 0 and the mean-value equality"};
    app.require_subcommand(1);
    Options o;

    auto* derive = app.add_subcommand("derive", "exterior derivative at a point (canonical directions)");
    add_field_options(derive, o);
    add_common(derive, o);
    derive->add_option("--at", o.at, "point x1,...,xn")->delimiter(',')->required();
    derive->add_option("--eps", o.eps, "stencil half-width");
    derive->add_option("--subdiv", o.subdiv, "midpoint cells per face axis (1 = face centres)");
    derive->add_option("--richardson", o.richardson, "Richardson levels over eps, eps/2, ...");

    auto* integrate = app.add_subcommand("integrate", "integral of a form over a chain");
    add_field_options(integrate, o);
    add_common(integrate, o);
    integrate->add_option("--chain", o.chain, "chain JSON file or built-in name")->required();
    integrate->add_option("--subdiv", o.subdiv, "midpoint cells per axis");
    integrate->add_option("--rtol", o.rtol, "doubling loop tolerance (0 = off)");

    auto* stokes = app.add_subcommand("stokes", "boundary integral vs integral of D omega");
    add_field_options(stokes, o);
    add_common(stokes, o);
    stokes->add_option("--chain", o.chain, "chain JSON file or built-in name")->required();
    stokes->add_option("--eps", o.eps, "cap on the stencil half-width at quadrature nodes");
    stokes->add_option("--subdiv", o.subdiv, "midpoint cells per axis");
    stokes->add_option("--rtol", o.rtol, "doubling loop tolerance for the boundary integral");
    stokes->add_flag("--analytic", o.analytic, "use --dform for the interior integral");

    auto* mvt = app.add_subcommand("mvt", "mean-value point of the average boundary flux");
    add_field_options(mvt, o);
    add_common(mvt, o);
    mvt->add_option("--block", o.block, "a1,b1,...,ak,bk")->delimiter(',')->required();
    mvt->add_option("--eps", o.eps, "stencil half-width for D at the located point");
    mvt->add_option("--subdiv", o.subdiv, "midpoint cells per face axis");
    mvt->add_option("--max-depth", o.max_depth, "trisection depth");

    auto* dsq = app.add_subcommand("dsq", "max-norm of D(D omega) at a point");
    add_field_options(dsq, o);
    add_common(dsq, o);
    dsq->add_option("--at", o.at, "point x1,...,xn")->delimiter(',')->required();
    dsq->add_option("--eps-outer", o.eps_outer, "outer stencil half-width (default 1e-3)");
    dsq->add_option("--eps-inner", o.eps_inner, "inner stencil half-width (default 1e-4)");
    dsq->add_option("--subdiv", o.subdiv, "midpoint cells per face axis");

    auto* conv = app.add_subcommand("convergence", "empirical order of the stencil");
    add_field_options(conv, o);
    add_common(conv, o);
    conv->add_option("--at", o.at, "point x1,...,xn")->delimiter(',')->required();
    conv->add_option("--eps-seq", o.eps_seq, "decreasing half-widths")->delimiter(',');
    conv->add_option("--reference", o.reference, "reference tensor JSON (text or file)");
    conv->add_option("--subdiv", o.subdiv, "midpoint cells per face axis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        const nlohmann::json err{{"error", {{"kind", "usage"}, {"message", e.what()}}}};
        std::cout << err.dump(2) << '\n';
        return 2;
    }

    for (auto* sub : app.get_subcommands()) o.command = sub->get_name();
    const auto result = fluxcalc::cli::run(o);
    const std::string text = result.report.dump(2) + "\n";
    std::cout << text;
    if (result.report.contains("warnings"))
        for (const auto& w : result.report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    if (o.out) {
        std::ofstream out(*o.out, std::ios::binary);
        if (!out) {
            std::cerr << "cannot write " << *o.out << '\n';
            return result.exit_code ? result.exit_code : 1;
        }
        out << text;
    }
    return result.exit_code;
}

// Experiment CLI. Subcommands: geo, train-classifier, diagnose-gradients,
// sweep-r, sweep-dim, attack, ood, embed. Exit codes: 0 success, 2 config
// error, 3 numeric failure.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hyperball/errors.hpp"
#include "hyperball/experiments.hpp"
#include "hyperball/geometry.hpp"

namespace {

using namespace hyperball;

Vec parse_vector(const std::string& text) {
    Vec out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                               : comma - start);
        if (part.empty()) throw ConfigError("geo: empty vector component in '" + text + "'");
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(part, &pos);
        } catch (const std::exception&) {
            throw ConfigError("geo: cannot parse '" + part + "' as a number");
        }
        if (pos != part.size()) throw ConfigError("geo: trailing junk in '" + part + "'");
        out.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

void print_scalar(double v) { std::printf("%.12g\n", v); }

void print_vector(std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i)
        std::printf("%s%.12g", i ? " " : "", v[i]);
    std::printf("\n");
}

int run_geo(const std::string& op, const std::vector<std::string>& args, double c, double t) {
    const Curvature curv(c);
    auto point = [&](std::size_t i) {
        if (i >= args.size()) throw ConfigError("geo " + op + ": missing vector argument");
        return BallPoint(parse_vector(args[i]), curv);
    };
    auto raw = [&](std::size_t i) {
        if (i >= args.size()) throw ConfigError("geo " + op + ": missing vector argument");
        return parse_vector(args[i]);
    };

    if (op == "conformal") print_scalar(conformal_factor(point(0)));
    else if (op == "add") print_vector(mobius_add(point(0), point(1)).x);
    else if (op == "smul") print_vector(mobius_scalar_mul(t, point(0)).x);
    else if (op == "exp0") print_vector(exp0(raw(0), curv).x);
    else if (op == "expat") {
        const BallPoint x = point(0);
        print_vector(exp_at(x, TangentVector{raw(1), x}).x);
    } else if (op == "logat") print_vector(log_at(point(0), point(1)).v);
    else if (op == "dist") print_scalar(distance(point(0), point(1)));
    else if (op == "odist") print_scalar(origin_distance(point(0)));
    else if (op == "gyroline") print_vector(gyroline(point(0), point(1), t).x);
    else if (op == "angle") print_scalar(angle(point(0), point(1), point(2)));
    else if (op == "defect") {
        const DefectResult res = triangle_defect(point(0), point(1), point(2));
        if (res.degenerate) std::printf("degenerate\n");
        print_scalar(res.defect);
    } else {
        throw ConfigError("geo: unknown operation '" + op +
                          "' (conformal|add|smul|exp0|expat|logat|dist|odist|gyroline|angle|defect)");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperball: Poincare-ball classifiers with feature clipping"};
    app.require_subcommand(1);

    // geo: vector arguments may start with '-', so they are taken from the
    // unparsed remainder rather than a positional.
    std::string geo_op;
    double geo_c = 1.0;
    double geo_t = 1.0;
    CLI::App* geo = app.add_subcommand("geo", "evaluate a ball-geometry operation");
    geo->add_option("op", geo_op, "operation name")->required();
    geo->add_option("--c", geo_c, "curvature magnitude (default 1)");
    geo->add_option("--t", geo_t, "scalar for smul/gyroline");
    geo->allow_extras();

    const std::vector<std::string> experiment_names = {
        "train-classifier", "diagnose-gradients", "sweep-r", "sweep-dim", "attack", "ood", "embed"};
    struct ExperimentArgs {
        std::string config_path;
        std::string out_dir;
        std::uint64_t seed = 0;
        bool seed_set = false;
        CLI::App* cmd = nullptr;
    };
    std::vector<ExperimentArgs> experiments(experiment_names.size());
    for (std::size_t i = 0; i < experiment_names.size(); ++i) {
        ExperimentArgs& e = experiments[i];
        e.cmd = app.add_subcommand(experiment_names[i], "run the " + experiment_names[i] + " driver");
        e.cmd->add_option("--config", e.config_path, "flat key = value config file");
        e.cmd->add_option("--out", e.out_dir, "output directory")->default_val("out");
        e.cmd->add_option("--seed", e.seed, "seed override")
            ->each([&e](const std::string&) { e.seed_set = true; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (geo->parsed()) {
            std::vector<std::string> geo_args = geo->remaining();
            return run_geo(geo_op, geo_args, geo_c, geo_t);
        }
        for (std::size_t i = 0; i < experiments.size(); ++i) {
            if (!experiments[i].cmd->parsed()) continue;
            ExperimentConfig cfg = experiments[i].config_path.empty()
                                       ? ExperimentConfig{}
                                       : ExperimentConfig::from_file(experiments[i].config_path);
            if (experiments[i].seed_set) cfg.seed = experiments[i].seed;
            run_subcommand(experiment_names[i], cfg, experiments[i].out_dir);
            return 0;
        }
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

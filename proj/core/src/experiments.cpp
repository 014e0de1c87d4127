#include "hyperball/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hyperball/checkpoint.hpp"
#include "hyperball/errors.hpp"

namespace hyperball {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file " + name + " under " + dir);
    return out;
}

// Minimal JSON emitter with fixed field order and %.9g floats, so reruns of
// the same config produce byte-identical summaries.
class JsonWriter {
  public:
    explicit JsonWriter(std::ostream& out) : out_(out) { out_ << "{"; }
    void close() { out_ << "\n}\n"; }

    void field(const std::string& key, const std::string& value) {
        sep();
        out_ << "\"" << key << "\": \"" << value << "\"";
    }
    void field(const std::string& key, double value) {
        sep();
        out_ << "\"" << key << "\": " << format_float(value);
    }
    void field(const std::string& key, std::uint64_t value) {
        sep();
        out_ << "\"" << key << "\": " << value;
    }
    void field(const std::string& key, const std::vector<double>& values) {
        sep();
        out_ << "\"" << key << "\": [";
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? ", " : "") << format_float(values[i]);
        out_ << "]";
    }

  private:
    void sep() {
        if (!first_) out_ << ",";
        first_ = false;
        out_ << "\n  ";
    }
    std::ostream& out_;
    bool first_ = true;
};

std::pair<Dataset, Dataset> split_per_class(const Dataset& all, std::size_t train_per_class) {
    Dataset train, test;
    train.num_classes = test.num_classes = all.num_classes;
    train.name = all.name;
    test.name = all.name;
    train.split = "train";
    test.split = "test";
    train.clamp01 = test.clamp01 = all.clamp01;
    std::vector<std::size_t> seen(all.num_classes, 0);
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto k = static_cast<std::size_t>(all.labels[i]);
        Dataset& target = seen[k] < train_per_class ? train : test;
        ++seen[k];
        target.features.push_back(all.features[i]);
        target.labels.push_back(all.labels[i]);
    }
    return {train, test};
}

Dataset apply_limit(Dataset data, std::size_t limit) {
    return limit == 0 ? data : data.head(limit);
}

std::string csv_row(std::initializer_list<double> values) {
    std::string row;
    for (double v : values) {
        if (!row.empty()) row += ",";
        row += format_float(v);
    }
    return row;
}

}  // namespace

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

bool mnist_available(const ExperimentConfig& cfg) {
    const fs::path dir(cfg.data_dir);
    return fs::exists(dir / "train-images-idx3-ubyte") &&
           fs::exists(dir / "train-labels-idx1-ubyte") &&
           fs::exists(dir / "t10k-images-idx3-ubyte") &&
           fs::exists(dir / "t10k-labels-idx1-ubyte");
}

std::pair<Dataset, Dataset> load_train_test(const ExperimentConfig& cfg) {
    if (cfg.dataset == "mnist") {
        const fs::path dir(cfg.data_dir);
        Dataset train = load_mnist_idx((dir / "train-images-idx3-ubyte").string(),
                                       (dir / "train-labels-idx1-ubyte").string());
        train.split = "train";
        Dataset test = load_mnist_idx((dir / "t10k-images-idx3-ubyte").string(),
                                      (dir / "t10k-labels-idx1-ubyte").string());
        test.split = "test";
        return {apply_limit(std::move(train), cfg.train_limit),
                apply_limit(std::move(test), cfg.test_limit)};
    }
    const std::size_t per_total = cfg.per_class + cfg.test_per_class;
    Dataset all = cfg.dataset == "hgaussians"
                      ? make_hierarchical_gaussians(cfg.groups, cfg.leaves, cfg.data_dim, per_total,
                                                    cfg.spread, cfg.seed)
                      : make_gaussians(cfg.classes, cfg.data_dim, per_total, cfg.spread, cfg.seed);
    auto [train, test] = split_per_class(all, cfg.per_class);
    return {apply_limit(std::move(train), cfg.train_limit),
            apply_limit(std::move(test), cfg.test_limit)};
}

TrainState make_state(const ExperimentConfig& cfg, std::size_t input_dim) {
    const std::size_t classes = cfg.dataset == "mnist" ? 10
                                : cfg.dataset == "hgaussians" ? cfg.groups * cfg.leaves
                                                              : cfg.classes;
    const auto widths = cfg.encoder_widths(input_dim);
    TrainState state =
        cfg.mode == ModelMode::euclidean
            ? TrainState::init_euclidean(widths, classes, cfg.seed, cfg.activation)
            : TrainState::init_hyperbolic(widths, classes, cfg.clip_config(),
                                          Curvature(cfg.curvature), cfg.seed, cfg.activation);
    state.lr_euclid = cfg.lr;
    state.lr_hyp = cfg.lr_hyp;
    state.momentum = cfg.momentum;
    return state;
}

namespace {

// Shared epoch loop; calls on_step after every optimizer step.
template <typename StepHook>
void train_epochs(TrainState& state, const Dataset& train, const ExperimentConfig& cfg,
                  MetricTrace& trace, StepHook&& on_step) {
    const auto refs = train.refs();
    std::vector<std::size_t> order(refs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<SampleRef> batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, state.rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(refs[order[i]]);
            trace.records.push_back(train_step(state, batch));
            on_step(epoch);
        }
    }
}

}  // namespace

ClassificationOutcome run_classification(const ExperimentConfig& cfg) {
    auto [train, test] = load_train_test(cfg);
    ClassificationOutcome out{MetricTrace{}, {}, {}, make_state(cfg, train.dim())};
    const auto test_refs = test.refs();

    const auto refs = train.refs();
    std::vector<std::size_t> order(refs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<SampleRef> batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, out.state.rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(refs[order[i]]);
            out.trace.records.push_back(train_step(out.state, batch));
        }
        out.epoch_test_accuracy.push_back(evaluate(out.state, test_refs).accuracy);
    }
    out.final_eval = evaluate(out.state, test_refs);
    return out;
}

DiagnosticOutcome run_gradient_diagnostic(const ExperimentConfig& cfg) {
    if (cfg.dim != 2)
        throw ConfigError("diagnose-gradients requires dim = 2");
    if (cfg.mode == ModelMode::euclidean)
        throw ConfigError("diagnose-gradients requires a hyperbolic mode");

    auto [train, test] = load_train_test(cfg);
    (void)test;
    DiagnosticOutcome out;
    TrainState state = make_state(cfg, train.dim());

    // Fixed tracked samples, drawn once from a dedicated stream.
    Xoshiro256pp pick(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<std::size_t> all(train.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    shuffle(all, pick);
    const std::size_t n_track = std::min<std::size_t>(cfg.track_samples, train.size());
    out.tracked.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_track));

    auto embed_of = [&](std::size_t idx) -> std::array<double, 2> {
        const Vec f = encode(state.encoder, train.features[idx]);
        const BallPoint x = lift(f, state.clip, state.curv);
        return {x.x[0], x.x[1]};
    };
    for (std::size_t idx : out.tracked) out.initial_positions.push_back(embed_of(idx));

    train_epochs(state, train, cfg, out.trace, [&](int) {
        std::vector<std::array<double, 2>> positions;
        positions.reserve(out.tracked.size());
        for (std::size_t idx : out.tracked) positions.push_back(embed_of(idx));
        out.trajectory.push_back(std::move(positions));
        const StepRecord& rec = out.trace.records.back();
        const Curvature curv(cfg.curvature);
        out.riemannian_factor_mean.push_back(
            riemannian_factor(rec.mean_embed_norm * rec.mean_embed_norm, curv));
        out.riemannian_factor_min.push_back(
            riemannian_factor(rec.max_embed_norm * rec.max_embed_norm, curv));
    });
    return out;
}

SweepROutcome run_sweep_r(const ExperimentConfig& cfg) {
    SweepROutcome out;
    for (double r : cfg.r_values) {
        ExperimentConfig point = cfg;
        point.mode = ModelMode::clipped;
        point.clip_r = r;
        out.r_values.push_back(r);
        out.test_accuracy.push_back(run_classification(point).final_eval.accuracy);
    }
    return out;
}

SweepDimOutcome run_sweep_dim(const ExperimentConfig& cfg) {
    SweepDimOutcome out;
    for (std::size_t n : cfg.dim_values) {
        ExperimentConfig clipped = cfg;
        clipped.mode = ModelMode::clipped;
        clipped.dim = n;
        ExperimentConfig euclid = cfg;
        euclid.mode = ModelMode::euclidean;
        euclid.dim = n;
        out.dims.push_back(n);
        out.clipped_accuracy.push_back(run_classification(clipped).final_eval.accuracy);
        out.euclidean_accuracy.push_back(run_classification(euclid).final_eval.accuracy);
    }
    return out;
}

AttackOutcome run_attack(const ExperimentConfig& cfg) {
    auto [train, test] = load_train_test(cfg);
    ClassificationOutcome trained = run_classification(cfg);

    const std::size_t limit = cfg.attack_limit == 0 ? test.size()
                                                    : std::min(cfg.attack_limit, test.size());
    AttackOutcome out;
    out.evaluated = limit;
    std::size_t clean_ok = 0, robust_ok = 0;
    for (std::size_t i = 0; i < limit; ++i) {
        const Vec& x = test.features[i];
        const int y = test.labels[i];
        if (argmax_class(model_logits(trained.state, x)) == y) ++clean_ok;
        const Vec adv = cfg.attack == "pgd"
                            ? pgd(trained.state, x, y, cfg.eps, cfg.attack_steps, cfg.step_size,
                                  test.clamp01)
                            : fgsm(trained.state, x, y, cfg.eps, test.clamp01);
        if (argmax_class(model_logits(trained.state, adv)) == y) ++robust_ok;
    }
    out.clean_accuracy = static_cast<double>(clean_ok) / static_cast<double>(limit);
    out.robust_accuracy = static_cast<double>(robust_ok) / static_cast<double>(limit);
    return out;
}

OodOutcome run_ood(const ExperimentConfig& cfg) {
    if (cfg.dataset == "mnist")
        throw ConfigError("ood requires a synthetic dataset (in = Gaussians, out = shifted Gaussians)");
    auto [train, test] = load_train_test(cfg);
    ClassificationOutcome trained = run_classification(cfg);

    // Out-of-distribution split: an independent draw of the same generator,
    // shifted along the first coordinate.
    const std::size_t per_total = cfg.per_class + cfg.test_per_class;
    Dataset out_data = cfg.dataset == "hgaussians"
                           ? make_hierarchical_gaussians(cfg.groups, cfg.leaves, cfg.data_dim,
                                                         per_total, cfg.spread, cfg.seed + 9999)
                           : make_gaussians(cfg.classes, cfg.data_dim, per_total, cfg.spread,
                                            cfg.seed + 9999);
    out_data = out_data.head(test.size());
    for (Vec& x : out_data.features) x[0] += cfg.shift;

    OodOutcome out;
    for (const Vec& x : test.features)
        out.in_scores.push_back(ood_score(model_logits(trained.state, x), cfg.score,
                                          cfg.ood_temperature));
    for (const Vec& x : out_data.features)
        out.out_scores.push_back(ood_score(model_logits(trained.state, x), cfg.score,
                                           cfg.ood_temperature));

    // metric_suite wants larger = in-distribution; the energy score is lower
    // for confident in-distribution inputs, so rank by its negative.
    std::vector<double> in_oriented = out.in_scores;
    std::vector<double> out_oriented = out.out_scores;
    if (cfg.score == OodScoreKind::energy) {
        for (double& s : in_oriented) s = -s;
        for (double& s : out_oriented) s = -s;
    }
    out.metrics = metric_suite(in_oriented, out_oriented);
    return out;
}

Hierarchy make_tree_hierarchy(std::size_t levels, std::size_t branching) {
    Hierarchy h;
    h.nodes.push_back("n0");
    std::vector<int> parent{-1};
    std::vector<int> previous_level{0};
    for (std::size_t level = 1; level <= levels; ++level) {
        std::vector<int> current;
        for (int p : previous_level) {
            for (std::size_t b = 0; b < branching; ++b) {
                const int id = static_cast<int>(h.nodes.size());
                h.nodes.push_back("n" + std::to_string(id));
                parent.push_back(p);
                current.push_back(id);
                // transitive closure: connect to every ancestor
                for (int anc = p; anc != -1; anc = parent[static_cast<std::size_t>(anc)])
                    h.edges.emplace_back(id, anc);
            }
        }
        previous_level = std::move(current);
    }
    h.validate();
    return h;
}

EmbedOutcome run_embed(const ExperimentConfig& cfg) {
    EmbedOutcome out;
    out.hierarchy = cfg.edges.empty() ? make_tree_hierarchy(cfg.tree_levels, cfg.tree_branching)
                                      : Hierarchy::from_edge_list_file(cfg.edges);
    out.table = train_embeddings(out.hierarchy, cfg.embed_mode, cfg.embed_config());
    out.map = map_score(out.table, out.hierarchy, &out.excluded);
    return out;
}

namespace {

void write_trace_csv(const MetricTrace& trace, std::ostream& out) {
    out << "step,loss,encoder_grad_norm,mean_embed_norm,max_embed_norm,accuracy\n";
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const StepRecord& r = trace.records[i];
        out << i << ","
            << csv_row({r.loss, r.encoder_grad_norm, r.mean_embed_norm, r.max_embed_norm,
                        r.accuracy})
            << "\n";
    }
}

void write_config_fields(JsonWriter& json, const ExperimentConfig& cfg) {
    json.field("mode", to_string(cfg.mode));
    json.field("dataset", cfg.dataset);
    json.field("seed", static_cast<std::uint64_t>(cfg.seed));
    json.field("curvature", cfg.curvature);
    json.field("clip_r", cfg.effective_clip_r());
    json.field("dim", static_cast<std::uint64_t>(cfg.dim));
    json.field("epochs", static_cast<std::uint64_t>(cfg.epochs));
    json.field("batch", static_cast<std::uint64_t>(cfg.batch));
    json.field("lr", cfg.lr);
    json.field("lr_hyp", cfg.lr_hyp);
    json.field("momentum", cfg.momentum);
}

void write_classification(const ExperimentConfig& cfg, const std::string& dir) {
    ClassificationOutcome res = run_classification(cfg);
    {
        auto out = open_out(dir, "trace.csv");
        write_trace_csv(res.trace, out);
    }
    {
        auto out = open_out(dir, "epochs.csv");
        out << "epoch,test_accuracy\n";
        for (std::size_t e = 0; e < res.epoch_test_accuracy.size(); ++e)
            out << e << "," << format_float(res.epoch_test_accuracy[e]) << "\n";
    }
    {
        auto out = open_out(dir, "per_class.csv");
        out << "class,count,accuracy\n";
        for (std::size_t k = 0; k < res.final_eval.per_class_accuracy.size(); ++k)
            out << k << "," << res.final_eval.per_class_count[k] << ","
                << format_float(res.final_eval.per_class_accuracy[k]) << "\n";
    }
    save_checkpoint(res.state, (fs::path(dir) / "checkpoint.bin").string());
    auto out = open_out(dir, "summary.json");
    JsonWriter json(out);
    write_config_fields(json, cfg);
    json.field("test_accuracy", res.final_eval.accuracy);
    json.field("test_loss", res.final_eval.mean_loss);
    json.field("final_train_loss",
               res.trace.records.empty() ? 0.0 : res.trace.records.back().loss);
    json.field("steps", static_cast<std::uint64_t>(res.trace.records.size()));
    json.field("per_class_accuracy", res.final_eval.per_class_accuracy);
    json.close();
}

void write_diagnostic(const ExperimentConfig& cfg, const std::string& dir) {
    DiagnosticOutcome res = run_gradient_diagnostic(cfg);
    {
        auto out = open_out(dir, "trace.csv");
        out << "step,loss,encoder_grad_norm,mean_embed_norm,max_embed_norm,accuracy,"
               "riemannian_factor_mean,riemannian_factor_min\n";
        for (std::size_t i = 0; i < res.trace.records.size(); ++i) {
            const StepRecord& r = res.trace.records[i];
            out << i << ","
                << csv_row({r.loss, r.encoder_grad_norm, r.mean_embed_norm, r.max_embed_norm,
                            r.accuracy, res.riemannian_factor_mean[i],
                            res.riemannian_factor_min[i]})
                << "\n";
        }
    }
    {
        auto out = open_out(dir, "trajectories.csv");
        out << "step,sample,x,y\n";
        for (std::size_t i = 0; i < res.tracked.size(); ++i)
            out << -1 << "," << res.tracked[i] << ","
                << csv_row({res.initial_positions[i][0], res.initial_positions[i][1]}) << "\n";
        for (std::size_t s = 0; s < res.trajectory.size(); ++s)
            for (std::size_t i = 0; i < res.tracked.size(); ++i)
                out << s << "," << res.tracked[i] << ","
                    << csv_row({res.trajectory[s][i][0], res.trajectory[s][i][1]}) << "\n";
    }
    auto out = open_out(dir, "summary.json");
    JsonWriter json(out);
    write_config_fields(json, cfg);
    json.field("steps", static_cast<std::uint64_t>(res.trace.records.size()));
    if (!res.trace.records.empty()) {
        json.field("final_mean_embed_norm", res.trace.records.back().mean_embed_norm);
        json.field("final_encoder_grad_norm", res.trace.records.back().encoder_grad_norm);
        json.field("final_loss", res.trace.records.back().loss);
    }
    json.close();
}

void write_sweep_r(const ExperimentConfig& cfg, const std::string& dir) {
    SweepROutcome res = run_sweep_r(cfg);
    {
        auto out = open_out(dir, "sweep.csv");
        out << "r,test_accuracy\n";
        for (std::size_t i = 0; i < res.r_values.size(); ++i)
            out << format_float(res.r_values[i]) << "," << format_float(res.test_accuracy[i])
                << "\n";
    }
    auto out = open_out(dir, "summary.json");
    JsonWriter json(out);
    write_config_fields(json, cfg);
    json.field("r_values", res.r_values);
    json.field("test_accuracy", res.test_accuracy);
    json.close();
}

void write_sweep_dim(const ExperimentConfig& cfg, const std::string& dir) {
    SweepDimOutcome res = run_sweep_dim(cfg);
    {
        auto out = open_out(dir, "sweep.csv");
        out << "dim,clipped_accuracy,euclidean_accuracy\n";
        for (std::size_t i = 0; i < res.dims.size(); ++i)
            out << res.dims[i] << "," << format_float(res.clipped_accuracy[i]) << ","
                << format_float(res.euclidean_accuracy[i]) << "\n";
    }
    auto out = open_out(dir, "summary.json");
    JsonWriter json(out);
    write_config_fields(json, cfg);
    json.field("clipped_accuracy", res.clipped_accuracy);
    json.field("euclidean_accuracy", res.euclidean_accuracy);
    json.close();
}

void write_attack(const ExperimentConfig& cfg, const std::string& dir) {
    AttackOutcome res = run_attack(cfg);
    auto out = open_out(dir, "summary.json");
    JsonWriter json(out);
    write_config_fields(json, cfg);
    json.field("attack", cfg.attack);
    json.field("eps", cfg.eps);
    json.field("attack_steps", static_cast<std::uint64_t>(cfg.attack_steps));
    json.field("step_size", cfg.step_size);
    json.field("evaluated", static_cast<std::uint64_t>(res.evaluated));
    json.field("clean_accuracy", res.clean_accuracy);
    json.field("robust_accuracy", res.robust_accuracy);
    json.close();
}

void write_ood(const ExperimentConfig& cfg, const std::string& dir) {
    OodOutcome res = run_ood(cfg);
    {
        auto out = open_out(dir, "scores.csv");
        out << "set,score\n";
        for (double s : res.in_scores) out << "in," << format_float(s) << "\n";
        for (double s : res.out_scores) out << "out," << format_float(s) << "\n";
    }
    auto out = open_out(dir, "summary.json");
    JsonWriter json(out);
    write_config_fields(json, cfg);
    json.field("score", to_string(cfg.score));
    json.field("fpr95", res.metrics.fpr95);
    json.field("auroc", res.metrics.auroc);
    json.field("aupr", res.metrics.aupr);
    json.close();
}

void write_embed(const ExperimentConfig& cfg, const std::string& dir) {
    EmbedOutcome res = run_embed(cfg);
    {
        auto out = open_out(dir, "embeddings.txt");
        write_embeddings(res.table, res.hierarchy, out);
    }
    auto out = open_out(dir, "summary.json");
    JsonWriter json(out);
    json.field("embed_mode", to_string(cfg.embed_mode));
    json.field("embed_dim", static_cast<std::uint64_t>(cfg.embed_dim));
    json.field("embed_epochs", static_cast<std::uint64_t>(cfg.embed_epochs));
    json.field("seed", static_cast<std::uint64_t>(cfg.seed));
    json.field("nodes", static_cast<std::uint64_t>(res.hierarchy.nodes.size()));
    json.field("edges", static_cast<std::uint64_t>(res.hierarchy.edges.size()));
    json.field("map", res.map);
    json.field("excluded_nodes", static_cast<std::uint64_t>(res.excluded));
    json.close();
}

}  // namespace

void run_subcommand(const std::string& name, const ExperimentConfig& cfg,
                    const std::string& out_dir) {
    fs::create_directories(out_dir);
    if (name == "train-classifier") write_classification(cfg, out_dir);
    else if (name == "diagnose-gradients") write_diagnostic(cfg, out_dir);
    else if (name == "sweep-r") write_sweep_r(cfg, out_dir);
    else if (name == "sweep-dim") write_sweep_dim(cfg, out_dir);
    else if (name == "attack") write_attack(cfg, out_dir);
    else if (name == "ood") write_ood(cfg, out_dir);
    else if (name == "embed") write_embed(cfg, out_dir);
    else throw ConfigError("unknown subcommand: " + name);
}

}  // namespace hyperball

#include "hyperball/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hyperball/errors.hpp"

namespace hyperball {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse number '" + value + "'");
    }
    if (pos != value.size())
        throw ConfigError("config key '" + key + "': trailing junk in '" + value + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    std::uint64_t out = 0;
    try {
        out = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse integer '" + value + "'");
    }
    if (pos != value.size())
        throw ConfigError("config key '" + key + "': trailing junk in '" + value + "'");
    return out;
}

int parse_int(const std::string& key, const std::string& value) {
    return static_cast<int>(parse_u64(key, value));
}

std::vector<std::string> split_commas(const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    return parts;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& part : split_commas(value)) out.push_back(parse_double(key, part));
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    for (const auto& part : split_commas(value)) out.push_back(parse_u64(key, part));
    return out;
}

}  // namespace

ModelMode model_mode_from_string(const std::string& name) {
    if (name == "clipped") return ModelMode::clipped;
    if (name == "vanilla") return ModelMode::vanilla;
    if (name == "euclidean") return ModelMode::euclidean;
    if (name == "soft") return ModelMode::soft;
    if (name == "temperature") return ModelMode::temperature;
    if (name == "none") return ModelMode::none;
    throw ConfigError("unknown mode '" + name +
                      "' (expected clipped|vanilla|euclidean|soft|temperature|none)");
}

std::string to_string(ModelMode mode) {
    switch (mode) {
        case ModelMode::clipped: return "clipped";
        case ModelMode::vanilla: return "vanilla";
        case ModelMode::euclidean: return "euclidean";
        case ModelMode::soft: return "soft";
        case ModelMode::temperature: return "temperature";
        case ModelMode::none: return "none";
    }
    return "?";
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!seen.insert(key).second)
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");

        if (key == "mode") cfg.mode = model_mode_from_string(value);
        else if (key == "clip_r") cfg.clip_r = parse_double(key, value);
        else if (key == "beta") cfg.beta = parse_double(key, value);
        else if (key == "temperature") cfg.temperature = parse_double(key, value);
        else if (key == "curvature") cfg.curvature = parse_double(key, value);
        else if (key == "dataset") cfg.dataset = value;
        else if (key == "data_dir") cfg.data_dir = value;
        else if (key == "classes") cfg.classes = parse_u64(key, value);
        else if (key == "groups") cfg.groups = parse_u64(key, value);
        else if (key == "leaves") cfg.leaves = parse_u64(key, value);
        else if (key == "data_dim") cfg.data_dim = parse_u64(key, value);
        else if (key == "per_class") cfg.per_class = parse_u64(key, value);
        else if (key == "test_per_class") cfg.test_per_class = parse_u64(key, value);
        else if (key == "spread") cfg.spread = parse_double(key, value);
        else if (key == "train_limit") cfg.train_limit = parse_u64(key, value);
        else if (key == "test_limit") cfg.test_limit = parse_u64(key, value);
        else if (key == "hidden") cfg.hidden = parse_size_list(key, value);
        else if (key == "dim") cfg.dim = parse_u64(key, value);
        else if (key == "activation") cfg.activation = activation_from_string(value);
        else if (key == "epochs") cfg.epochs = parse_int(key, value);
        else if (key == "batch") cfg.batch = parse_u64(key, value);
        else if (key == "lr") cfg.lr = parse_double(key, value);
        else if (key == "lr_hyp") cfg.lr_hyp = parse_double(key, value);
        else if (key == "momentum") cfg.momentum = parse_double(key, value);
        else if (key == "seed") cfg.seed = parse_u64(key, value);
        else if (key == "attack") cfg.attack = value;
        else if (key == "eps") cfg.eps = parse_double(key, value);
        else if (key == "attack_steps") cfg.attack_steps = parse_int(key, value);
        else if (key == "step_size") cfg.step_size = parse_double(key, value);
        else if (key == "attack_limit") cfg.attack_limit = parse_u64(key, value);
        else if (key == "score") cfg.score = ood_score_kind_from_string(value);
        else if (key == "ood_temperature") cfg.ood_temperature = parse_double(key, value);
        else if (key == "shift") cfg.shift = parse_double(key, value);
        else if (key == "edges") cfg.edges = value;
        else if (key == "tree_levels") cfg.tree_levels = parse_u64(key, value);
        else if (key == "tree_branching") cfg.tree_branching = parse_u64(key, value);
        else if (key == "embed_mode") cfg.embed_mode = embed_mode_from_string(value);
        else if (key == "embed_epochs") cfg.embed_epochs = parse_int(key, value);
        else if (key == "embed_lr") cfg.embed_lr = parse_double(key, value);
        else if (key == "negatives") cfg.negatives = parse_int(key, value);
        else if (key == "burn_in") cfg.burn_in = parse_int(key, value);
        else if (key == "embed_dim") cfg.embed_dim = parse_u64(key, value);
        else if (key == "init_radius") cfg.init_radius = parse_double(key, value);
        else if (key == "r_values") cfg.r_values = parse_double_list(key, value);
        else if (key == "dim_values") cfg.dim_values = parse_size_list(key, value);
        else if (key == "track_samples") cfg.track_samples = parse_u64(key, value);
        else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in);
}

void ExperimentConfig::validate() const {
    if (!(curvature > 0.0)) throw ConfigError("curvature must be > 0");
    if (dataset != "gaussians" && dataset != "hgaussians" && dataset != "mnist")
        throw ConfigError("dataset must be gaussians|hgaussians|mnist");
    if (dim == 0) throw ConfigError("dim must be >= 1");
    if (batch == 0) throw ConfigError("batch must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(lr > 0.0) || !(lr_hyp > 0.0)) throw ConfigError("learning rates must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
    if (clip_r == 0.0 || (clip_r > 0.0 && !std::isfinite(clip_r)))
        throw ConfigError("clip_r must be positive and finite");
    if (attack != "fgsm" && attack != "pgd") throw ConfigError("attack must be fgsm|pgd");
    if (attack_steps < 1) throw ConfigError("attack_steps must be >= 1");
    if (negatives < 1) throw ConfigError("negatives must be >= 1");
    if (embed_dim == 0) throw ConfigError("embed_dim must be >= 1");
    if (tree_levels < 1 || tree_branching < 1)
        throw ConfigError("tree_levels and tree_branching must be >= 1");
    clip_config().validate();
}

double ExperimentConfig::effective_clip_r() const {
    if (clip_r > 0.0) return clip_r;
    return mode == ModelMode::vanilla ? 15.0 : 1.0;
}

ClipConfig ExperimentConfig::clip_config() const {
    switch (mode) {
        case ModelMode::clipped:
        case ModelMode::vanilla:
            return ClipConfig::hard(effective_clip_r());
        case ModelMode::soft:
            return ClipConfig::soft(beta);
        case ModelMode::temperature:
            return ClipConfig::with_temperature(temperature);
        case ModelMode::euclidean:
        case ModelMode::none:
            return ClipConfig::none();
    }
    return ClipConfig::none();
}

EmbedConfig ExperimentConfig::embed_config() const {
    EmbedConfig out;
    out.dim = embed_dim;
    out.epochs = embed_epochs;
    out.lr = embed_lr;
    out.negatives = negatives;
    out.burn_in_epochs = burn_in;
    out.curv = Curvature(curvature);
    out.clip_r = effective_clip_r();
    out.init_radius = init_radius;
    out.seed = seed;
    return out;
}

std::vector<std::size_t> ExperimentConfig::encoder_widths(std::size_t input_dim) const {
    std::vector<std::size_t> widths;
    widths.push_back(input_dim);
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(dim);
    return widths;
}

}  // namespace hyperball

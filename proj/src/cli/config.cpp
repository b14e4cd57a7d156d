#include "normlab/cli/config.hpp"

#include "normlab/core/errors.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace normlab::cli {

using nlohmann::json;

std::string_view experiment_name(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::Train: return "train";
    case ExperimentKind::Analyze: return "analyze";
    case ExperimentKind::Noise: return "noise";
    case ExperimentKind::Regularization: return "regularization";
    case ExperimentKind::Gradcheck: return "gradcheck";
    }
    return "unknown";
}

ExperimentKind parse_experiment(std::string_view name) {
    for (auto k : {ExperimentKind::Train, ExperimentKind::Analyze, ExperimentKind::Noise,
                   ExperimentKind::Regularization, ExperimentKind::Gradcheck})
        if (experiment_name(k) == name) return k;
    throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

ExperimentConfig defaults_for(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
    case ExperimentKind::Train:
        // 164 epochs, lr 0.1 * batch/128 divided by 10 after epochs 81 and 122,
        // weight decay 1e-4 (CIFAR-10 protocol).
        c.optimizer.kind = OptimizerKind::SgdMomentum;
        c.optimizer.momentum = 0.9;
        c.optimizer.weight_decay = 1e-4;
        c.optimizer.schedule = {{81, 0.1}, {122, 0.1}};
        c.epochs = 164;
        c.lr_from_formula = true;
        break;
    case ExperimentKind::Analyze:
    case ExperimentKind::Regularization:
        c.optimizer.kind = OptimizerKind::Adam;
        c.optimizer.lr = 1e-3;
        c.lr_from_formula = false;
        c.epochs = 20;
        c.optimizer.weight_decay = kind == ExperimentKind::Regularization ? 5e-5 : 0.0;
        break;
    case ExperimentKind::Noise:
        c.optimizer.kind = OptimizerKind::Adam;
        c.optimizer.lr = 1e-3;
        c.lr_from_formula = false;
        c.epochs = 50;
        c.noise = true;
        break;
    case ExperimentKind::Gradcheck:
        break;
    }
    return c;
}

namespace {

[[noreturn]] void bad(const std::string &key, const std::string &what) {
    throw ConfigError("config key '" + key + "': " + what);
}

std::size_t get_count(const json &v, const std::string &key) {
    if (!v.is_number_integer() || v.get<long long>() < 0) bad(key, "expected a non-negative integer");
    return v.get<std::size_t>();
}

double get_real(const json &v, const std::string &key) {
    if (!v.is_number()) bad(key, "expected a number");
    return v.get<double>();
}

bool get_bool(const json &v, const std::string &key) {
    if (!v.is_boolean()) bad(key, "expected true or false");
    return v.get<bool>();
}

std::string get_string(const json &v, const std::string &key) {
    if (!v.is_string()) bad(key, "expected a string");
    return v.get<std::string>();
}

const std::set<std::string> kCommonKeys{"experiment", "seed", "out_dir"};
const std::set<std::string> kTrainingKeys{
    "variant",      "groups",       "widths",       "dataset",      "data_dir",
    "train_subset", "val_subset",   "synthetic",    "batch_size",   "eval_batch_size",
    "lr",           "optimizer",    "momentum",     "beta1",        "beta2",
    "adam_eps",     "epochs",       "schedule",     "weight_decay", "decay_norm_params",
    "augment_flip", "augment_crop", "checkpoint"};
const std::set<std::string> kNoiseKeys{"noise_mu", "noise_sigma"};
const std::set<std::string> kAnalysisKeys{"eta_grid", "probe_every", "landscape_mode"};
const std::set<std::string> kGradcheckKeys{"fault_injection"};

bool allowed(ExperimentKind kind, const std::string &key) {
    if (kCommonKeys.contains(key)) return true;
    if (kind == ExperimentKind::Gradcheck) return kGradcheckKeys.contains(key);
    if (kTrainingKeys.contains(key)) return true;
    if (kind == ExperimentKind::Noise) return kNoiseKeys.contains(key);
    if (kind == ExperimentKind::Analyze || kind == ExperimentKind::Regularization)
        return kAnalysisKeys.contains(key);
    return false;
}

void apply_synthetic(SyntheticSpec &s, const json &v) {
    if (!v.is_object()) bad("synthetic", "expected an object");
    for (const auto &[key, value] : v.items()) {
        const std::string k = "synthetic." + key;
        if (key == "classes") s.classes = static_cast<int>(get_count(value, k));
        else if (key == "n_per_class") s.n_per_class = get_count(value, k);
        else if (key == "val_per_class") s.val_per_class = get_count(value, k);
        else if (key == "height") s.height = get_count(value, k);
        else if (key == "width") s.width = get_count(value, k);
        else bad(k, "unknown key");
    }
}

void validate(const ExperimentConfig &c) {
    if (c.kind == ExperimentKind::Gradcheck) return;
    if (c.batch_size == 0) bad("batch_size", "must be at least 1");
    if (c.eval_batch_size == 0) bad("eval_batch_size", "must be at least 1");
    if (c.groups == 0) bad("groups", "must be at least 1");
    if (c.widths.size() != 3) bad("widths", "expected three channel counts");
    for (std::size_t w : c.widths) {
        if (w == 0) bad("widths", "channel counts must be positive");
        if (c.variant != NormKind::BatchNorm && w % c.groups != 0)
            bad("groups", std::to_string(w) + " channels are not divisible by " +
                              std::to_string(c.groups) + " groups");
    }
    if (c.synthetic.classes < 2) bad("synthetic.classes", "must be at least 2");
    if (c.noise && !(c.noise_sigma >= 0.0)) bad("noise_sigma", "must be non-negative");
    try {
        c.optimizer.validate();
        if (c.kind == ExperimentKind::Analyze || c.kind == ExperimentKind::Regularization)
            c.analysis.validate();
    } catch (const ConfigError &e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
}

} // namespace

ExperimentConfig resolve_config(ExperimentKind kind, const json &doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c = defaults_for(kind);

    for (const auto &[key, v] : doc.items()) {
        if (!allowed(kind, key)) {
            const bool known = kCommonKeys.contains(key) || kTrainingKeys.contains(key) ||
                               kNoiseKeys.contains(key) || kAnalysisKeys.contains(key) ||
                               kGradcheckKeys.contains(key);
            bad(key, known ? "not valid for the " + std::string(experiment_name(kind)) + " experiment"
                           : "unknown key");
        }
        if (key == "experiment") {
            if (parse_experiment(get_string(v, key)) != kind)
                bad(key, "names a different experiment than the command");
        } else if (key == "seed") c.seed = get_count(v, key);
        else if (key == "out_dir") c.out_dir = get_string(v, key);
        else if (key == "fault_injection") c.fault_injection = get_string(v, key);
        else if (key == "variant") c.variant = parse_norm_kind(get_string(v, key));
        else if (key == "groups") c.groups = get_count(v, key);
        else if (key == "widths") {
            if (!v.is_array()) bad(key, "expected an array");
            c.widths.clear();
            for (const auto &e : v) c.widths.push_back(get_count(e, key));
        } else if (key == "dataset") {
            const std::string d = get_string(v, key);
            if (d == "synthetic") c.dataset = DatasetKind::Synthetic;
            else if (d == "cifar10") c.dataset = DatasetKind::Cifar10;
            else bad(key, "expected 'synthetic' or 'cifar10'");
        } else if (key == "data_dir") c.data_dir = get_string(v, key);
        else if (key == "train_subset") c.train_subset = get_count(v, key);
        else if (key == "val_subset") c.val_subset = get_count(v, key);
        else if (key == "synthetic") apply_synthetic(c.synthetic, v);
        else if (key == "batch_size") c.batch_size = get_count(v, key);
        else if (key == "eval_batch_size") c.eval_batch_size = get_count(v, key);
        else if (key == "lr") {
            if (v.is_string()) {
                if (v.get<std::string>() != "formula") bad(key, "expected a number or \"formula\"");
                c.lr_from_formula = true;
            } else {
                c.optimizer.lr = get_real(v, key);
                c.lr_from_formula = false;
            }
        } else if (key == "optimizer") {
            const std::string o = get_string(v, key);
            if (o == "sgd") c.optimizer.kind = OptimizerKind::SgdMomentum;
            else if (o == "adam") c.optimizer.kind = OptimizerKind::Adam;
            else bad(key, "expected 'sgd' or 'adam'");
        } else if (key == "momentum") c.optimizer.momentum = get_real(v, key);
        else if (key == "beta1") c.optimizer.beta1 = get_real(v, key);
        else if (key == "beta2") c.optimizer.beta2 = get_real(v, key);
        else if (key == "adam_eps") c.optimizer.adam_eps = get_real(v, key);
        else if (key == "epochs") c.epochs = get_count(v, key);
        else if (key == "schedule") {
            if (!v.is_array()) bad(key, "expected an array of [epoch, multiplier] pairs");
            c.optimizer.schedule.clear();
            for (const auto &e : v) {
                if (!e.is_array() || e.size() != 2) bad(key, "expected [epoch, multiplier] pairs");
                c.optimizer.schedule.push_back({get_count(e[0], key), get_real(e[1], key)});
            }
        } else if (key == "weight_decay") c.optimizer.weight_decay = get_real(v, key);
        else if (key == "decay_norm_params") c.optimizer.decay_norm_params = get_bool(v, key);
        else if (key == "augment_flip") c.augment_flip = get_bool(v, key);
        else if (key == "augment_crop") c.augment_crop = get_bool(v, key);
        else if (key == "checkpoint") c.write_checkpoint = get_bool(v, key);
        else if (key == "noise_mu") c.noise_mu = get_real(v, key);
        else if (key == "noise_sigma") c.noise_sigma = get_real(v, key);
        else if (key == "eta_grid") {
            if (!v.is_array()) bad(key, "expected an array");
            c.analysis.eta_grid.clear();
            for (const auto &e : v) c.analysis.eta_grid.push_back(get_real(e, key));
        } else if (key == "probe_every") c.analysis.probe_every = get_count(v, key);
        else if (key == "landscape_mode") {
            const std::string m = get_string(v, key);
            if (m == "per_step") c.analysis.mode = LandscapeMode::PerStep;
            else if (m == "per_run") c.analysis.mode = LandscapeMode::PerRun;
            else bad(key, "expected 'per_step' or 'per_run'");
        }
    }
    if (c.lr_from_formula) c.optimizer.lr = batch_scaled_lr(c.batch_size);
    validate(c);
    return c;
}

json read_config_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
}

json to_json(const ExperimentConfig &c) {
    json j;
    j["experiment"] = experiment_name(c.kind);
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    if (c.kind == ExperimentKind::Gradcheck) {
        j["fault_injection"] = c.fault_injection;
        return j;
    }
    j["variant"] = norm_kind_name(c.variant);
    j["groups"] = c.groups;
    j["widths"] = c.widths;
    j["dataset"] = c.dataset == DatasetKind::Synthetic ? "synthetic" : "cifar10";
    j["data_dir"] = c.data_dir;
    j["train_subset"] = c.train_subset;
    j["val_subset"] = c.val_subset;
    j["synthetic"] = {{"classes", c.synthetic.classes},
                      {"n_per_class", c.synthetic.n_per_class},
                      {"val_per_class", c.synthetic.val_per_class},
                      {"height", c.synthetic.height},
                      {"width", c.synthetic.width}};
    j["batch_size"] = c.batch_size;
    j["eval_batch_size"] = c.eval_batch_size;
    j["lr"] = c.optimizer.lr;
    j["lr_rule"] = c.lr_from_formula ? "0.1 * batch_size / 128" : "fixed";
    j["optimizer"] = c.optimizer.kind == OptimizerKind::Adam ? "adam" : "sgd";
    j["momentum"] = c.optimizer.momentum;
    j["beta1"] = c.optimizer.beta1;
    j["beta2"] = c.optimizer.beta2;
    j["adam_eps"] = c.optimizer.adam_eps;
    j["epochs"] = c.epochs;
    json sched = json::array();
    for (const auto &s : c.optimizer.schedule) sched.push_back({s.epoch, s.multiplier});
    j["schedule"] = sched;
    j["weight_decay"] = c.optimizer.weight_decay;
    j["decay_norm_params"] = c.optimizer.decay_norm_params;
    j["augment_flip"] = c.augment_flip;
    j["augment_crop"] = c.augment_crop;
    j["checkpoint"] = c.write_checkpoint;
    if (c.kind == ExperimentKind::Noise) {
        j["noise_mu"] = c.noise_mu;
        j["noise_sigma"] = c.noise_sigma;
    }
    if (c.kind == ExperimentKind::Analyze || c.kind == ExperimentKind::Regularization) {
        j["eta_grid"] = c.analysis.eta_grid;
        j["probe_every"] = c.analysis.probe_every;
        j["landscape_mode"] = c.analysis.mode == LandscapeMode::PerRun ? "per_run" : "per_step";
    }
    return j;
}

TrainConfig make_train_config(const ExperimentConfig &c) {
    TrainConfig t;
    t.optimizer = c.optimizer;
    t.epochs = c.epochs;
    t.batch_size = c.batch_size;
    t.eval_batch_size = c.eval_batch_size;
    t.seed = c.seed;
    t.augment_flip = c.augment_flip;
    t.augment_crop = c.augment_crop;
    return t;
}

MicroCnnOptions make_model_options(const ExperimentConfig &c, int classes) {
    MicroCnnOptions o;
    o.classes = classes;
    o.norm = c.variant;
    o.groups = c.groups;
    std::copy(c.widths.begin(), c.widths.end(), o.widths);
    o.noise = c.noise && (c.noise_mu != 0.0 || c.noise_sigma != 0.0);
    o.noise_mu = c.noise_mu;
    o.noise_sigma = c.noise_sigma;
    return o;
}

} // namespace normlab::cli

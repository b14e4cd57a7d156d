#include "normlab/cli/commands.hpp"

#include "normlab/cli/checkpoint.hpp"
#include "normlab/cli/csv.hpp"
#include "normlab/cli/gradcheck.hpp"
#include "normlab/core/errors.hpp"
#include "normlab/data/cifar10.hpp"
#include "normlab/data/synthetic.hpp"
#include "normlab/simd/kernels.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace normlab::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Data {
    LabeledImageSet train;
    LabeledImageSet val;
};

Data load_data(const ExperimentConfig &cfg) {
    Data d;
    if (cfg.dataset == DatasetKind::Synthetic) {
        const auto &s = cfg.synthetic;
        d.train = synth_dataset(cfg.seed, s.n_per_class, s.classes, s.height, s.width, Split::Train);
        d.val = synth_dataset(mix_seed(cfg.seed, 0x7A1), s.val_per_class, s.classes, s.height,
                              s.width, Split::Val);
    } else {
        std::string dir = cfg.data_dir;
        if (dir.empty()) {
            const char *env = std::getenv("NORMLAB_DATA");
            if (env) dir = env;
        }
        if (dir.empty())
            throw InputError("CIFAR-10 directory not given: set data_dir in the config or "
                             "the NORMLAB_DATA environment variable");
        auto splits = cifar10::load(dir);
        d.train = std::move(splits.train);
        d.val = std::move(splits.val);
    }
    if (cfg.train_subset) d.train = d.train.head(cfg.train_subset);
    if (cfg.val_subset) d.val = d.val.head(cfg.val_subset);
    return d;
}

Model make_model(const ExperimentConfig &cfg, int classes) {
    const auto specs = micro_cnn_spec(make_model_options(cfg, classes));
    return build_model(specs, cfg.seed);
}

void prepare_out_dir(const ExperimentConfig &cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw InputError("cannot create output directory " + cfg.out_dir + ": " + ec.message());
}

fs::path out_file(const ExperimentConfig &cfg, const char *name) {
    return fs::path(cfg.out_dir) / name;
}

void write_metrics(const ExperimentConfig &cfg, const TrainOutcome &o) {
    std::vector<std::string> header{"epoch", "train_loss", "train_acc", "val_loss", "val_acc"};
    header.insert(header.end(), o.lambda_names.begin(), o.lambda_names.end());
    header.push_back("divergence_flag");
    CsvWriter csv(out_file(cfg, "metrics.csv"), header);
    for (const auto &e : o.epochs) {
        std::vector<std::string> row{format_number(e.epoch), format_number(e.train_loss),
                                     format_number(e.train_acc), format_number(e.val_loss),
                                     format_number(e.val_acc)};
        for (double l : e.lambdas) row.push_back(format_number(l));
        row.emplace_back(divergence_name(Divergence::None));
        csv.row(row);
    }
    if (o.divergence != Divergence::None) {
        // The interrupted epoch: no metrics, only the flag.
        std::vector<std::string> row(header.size());
        row.front() = format_number(o.divergence_epoch.value_or(o.epochs.size()));
        row.back() = std::string(divergence_name(o.divergence));
        csv.row(row);
    }
}

json outcome_json(const TrainOutcome &o) {
    json j;
    j["epochs_completed"] = o.epochs.size();
    j["steps"] = o.steps;
    j["divergence"] = divergence_name(o.divergence);
    j["divergence_epoch"] = o.divergence_epoch ? json(*o.divergence_epoch) : json(nullptr);
    j["divergence_step"] = o.divergence_step ? json(*o.divergence_step) : json(nullptr);
    if (!o.epochs.empty()) {
        const auto &last = o.epochs.back();
        j["final_train_loss"] = last.train_loss;
        j["final_train_acc"] = last.train_acc;
        j["final_val_loss"] = last.val_loss;
        j["final_val_acc"] = last.val_acc;
        auto best = std::ranges::max_element(o.epochs, {}, &EpochRecord::val_acc);
        j["best_val_acc"] = best->val_acc;
        j["best_val_epoch"] = best->epoch;
    } else {
        for (const char *k : {"final_train_loss", "final_train_acc", "final_val_loss",
                              "final_val_acc", "best_val_acc", "best_val_epoch"})
            j[k] = nullptr;
    }
    json lambdas = json::object();
    for (std::size_t i = 0; i < o.lambda_names.size(); ++i)
        lambdas[o.lambda_names[i]] = o.final_lambdas[i];
    j["final_lambdas"] = lambdas;
    return j;
}

void write_summary(const ExperimentConfig &cfg, json result, double seconds) {
    json j;
    j["config"] = to_json(cfg);
    j["seed"] = cfg.seed;
    j["result"] = std::move(result);
    j["wall_time_seconds"] = seconds;
    j["simd"] = simd::isa_name(simd::active().isa);
    std::ofstream out(out_file(cfg, "summary.json"));
    if (!out) throw InputError("cannot write summary.json in " + cfg.out_dir);
    out << std::setw(2) << j << '\n';
}

void log_outcome(std::ostream &log, const TrainOutcome &o) {
    for (const auto &e : o.epochs)
        log << "epoch " << e.epoch << "  lr " << format_number(e.lr) << "  train_loss "
            << format_number(e.train_loss) << "  train_acc " << format_number(e.train_acc)
            << "  val_acc " << format_number(e.val_acc) << '\n';
    if (o.divergence != Divergence::None)
        log << "divergence: " << divergence_name(o.divergence) << " at step "
            << o.divergence_step.value_or(0) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_training(const ExperimentConfig &cfg, std::ostream &log) {
    const auto t0 = std::chrono::steady_clock::now();
    Data data = load_data(cfg);
    prepare_out_dir(cfg);
    Model model = make_model(cfg, data.train.class_count);
    const TrainOutcome outcome = train(model, data.train, data.val, make_train_config(cfg));
    write_metrics(cfg, outcome);
    if (cfg.write_checkpoint) save_checkpoint(out_file(cfg, "checkpoint.bin"), model);
    log_outcome(log, outcome);
    write_summary(cfg, outcome_json(outcome), seconds_since(t0));
    return kExitOk;
}

int run_instrumented(const ExperimentConfig &cfg, std::ostream &log) {
    const auto t0 = std::chrono::steady_clock::now();
    Data data = load_data(cfg);
    prepare_out_dir(cfg);
    const int classes = data.train.class_count;
    const TrainConfig tc = make_train_config(cfg);

    Model model = make_model(cfg, classes);
    AnalysisResult res =
        cfg.analysis.mode == LandscapeMode::PerStep
            ? run_analysis(model, data.train, data.val, tc, cfg.analysis)
            : run_lr_sweep([&] { return make_model(cfg, classes); }, data.train, data.val, tc,
                           cfg.analysis);

    write_metrics(cfg, res.outcome);
    {
        CsvWriter csv(out_file(cfg, "landscape.csv"), {"step", "eta", "loss"});
        for (const auto &s : res.series.landscape)
            for (std::size_t i = 0; i < s.losses.size(); ++i)
                csv.row({format_number(s.step), format_number(res.series.etas[i]),
                         format_number(s.losses[i])});
    }
    {
        CsvWriter csv(out_file(cfg, "gradpred.csv"), {"step", "l2_distance"});
        for (const auto &g : res.series.gradpred)
            csv.row({format_number(g.step), format_number(g.l2_distance)});
    }
    // Only PerStep runs leave a single trained model behind.
    if (cfg.write_checkpoint && cfg.analysis.mode == LandscapeMode::PerStep)
        save_checkpoint(out_file(cfg, "checkpoint.bin"), model);
    log_outcome(log, res.outcome);

    json result = outcome_json(res.outcome);
    double range_sum = 0.0, gp_sum = 0.0;
    std::size_t flagged = 0;
    for (const auto &s : res.series.landscape) {
        range_sum += s.loss_max - s.loss_min;
        flagged += s.flagged;
    }
    for (const auto &g : res.series.gradpred) gp_sum += g.l2_distance;
    const auto n_land = res.series.landscape.size();
    const auto n_gp = res.series.gradpred.size();
    result["probed_steps"] = n_land;
    result["flagged_probes"] = flagged;
    result["mean_landscape_range"] = n_land ? json(range_sum / double(n_land)) : json(nullptr);
    result["mean_gradpred_distance"] = n_gp ? json(gp_sum / double(n_gp)) : json(nullptr);
    log << "probed steps " << n_land << ", flagged " << flagged << '\n';
    write_summary(cfg, std::move(result), seconds_since(t0));
    return kExitOk;
}

void require_kind(const ExperimentConfig &cfg, ExperimentKind kind) {
    if (cfg.kind != kind)
        throw UsageError("config for '" + std::string(experiment_name(cfg.kind)) +
                         "' passed to the " + std::string(experiment_name(kind)) + " command");
}

} // namespace

int cmd_train(const ExperimentConfig &cfg, std::ostream &log) {
    require_kind(cfg, ExperimentKind::Train);
    return run_training(cfg, log);
}

int cmd_noise(const ExperimentConfig &cfg, std::ostream &log) {
    require_kind(cfg, ExperimentKind::Noise);
    log << "noise mu " << format_number(cfg.noise_mu) << " sigma " << format_number(cfg.noise_sigma)
        << '\n';
    return run_training(cfg, log);
}

int cmd_analyze(const ExperimentConfig &cfg, std::ostream &log) {
    require_kind(cfg, ExperimentKind::Analyze);
    return run_instrumented(cfg, log);
}

int cmd_regularization(const ExperimentConfig &cfg, std::ostream &log) {
    require_kind(cfg, ExperimentKind::Regularization);
    log << "weight decay " << format_number(cfg.optimizer.weight_decay) << '\n';
    return run_instrumented(cfg, log);
}

int cmd_gradcheck(const ExperimentConfig &cfg, std::ostream &log) {
    require_kind(cfg, ExperimentKind::Gradcheck);
    GradcheckOptions opt;
    opt.seed = cfg.seed;
    opt.fault = cfg.fault_injection;
    const auto entries = run_gradcheck(opt);

    std::size_t width = 5;
    for (const auto &e : entries) width = std::max(width, e.check.size());
    log << std::left << std::setw(int(width) + 2) << "check" << std::setw(14) << "input"
        << std::setw(10) << "compared" << "max_rel_error\n";
    bool ok = true;
    for (const auto &e : entries) {
        log << std::setw(int(width) + 2) << e.check << std::setw(14) << e.shape << std::setw(10)
            << e.compared << format_number(e.max_rel_error) << (e.pass ? "" : "  FAIL") << '\n';
        ok = ok && e.pass;
    }
    log << std::right;
    if (!ok) {
        log << "gradient check failed (tolerance " << format_number(opt.tolerance) << "):\n";
        for (const auto &e : entries)
            if (!e.pass) log << "  " << e.check << ": " << format_number(e.max_rel_error) << '\n';
        return kExitVerificationFailed;
    }
    log << "all " << entries.size() << " checks within " << format_number(opt.tolerance) << '\n';
    return kExitOk;
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Normalization-layer training and analysis experiments", "normlab"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> out_dir;
    } args;

    const std::pair<ExperimentKind, const char *> commands[] = {
        {ExperimentKind::Train, "train a MicroCNN and write metrics"},
        {ExperimentKind::Analyze, "training run with loss-landscape and gradient probes"},
        {ExperimentKind::Noise, "training run with noise after every normalization layer"},
        {ExperimentKind::Regularization, "instrumented run with weight decay"},
        {ExperimentKind::Gradcheck, "finite-difference check of every backward pass"},
    };
    for (const auto &[kind, help] : commands) {
        auto *sub = app.add_subcommand(std::string(experiment_name(kind)), help);
        auto *opt = sub->add_option("--config", args.config, "JSON config file");
        if (kind != ExperimentKind::Gradcheck) opt->required();
        sub->add_option("--seed", args.seed, "override the config seed");
        sub->add_option("--out", args.out_dir, "override the output directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        const auto *sub = app.get_subcommands().front();
        const ExperimentKind kind = parse_experiment(sub->get_name());
        json doc = args.config.empty() ? json::object() : read_config_file(args.config);
        if (args.seed) doc["seed"] = *args.seed;
        if (args.out_dir) doc["out_dir"] = *args.out_dir;
        const ExperimentConfig cfg = resolve_config(kind, doc);

        switch (kind) {
        case ExperimentKind::Train: return cmd_train(cfg, out);
        case ExperimentKind::Analyze: return cmd_analyze(cfg, out);
        case ExperimentKind::Noise: return cmd_noise(cfg, out);
        case ExperimentKind::Regularization: return cmd_regularization(cfg, out);
        case ExperimentKind::Gradcheck: return cmd_gradcheck(cfg, out);
        }
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const InputError &e) {
        err << "input error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kExitVerificationFailed;
    }
    return kExitOk;
}

} // namespace normlab::cli

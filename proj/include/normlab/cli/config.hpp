#pragma once

#include "normlab/analysis/analysis.hpp"
#include "normlab/net/layers.hpp"
#include "normlab/net/optimizer.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace normlab::cli {

enum class ExperimentKind { Train, Analyze, Noise, Regularization, Gradcheck };

std::string_view experiment_name(ExperimentKind k);
ExperimentKind parse_experiment(std::string_view name);

enum class DatasetKind { Synthetic, Cifar10 };

struct SyntheticSpec {
    int classes = 3;
    std::size_t n_per_class = 200;
    std::size_t val_per_class = 50;
    std::size_t height = 16;
    std::size_t width = 16;
};

// Fully resolved experiment settings: per-kind defaults applied, then the
// user's keys, then the batch-scaled learning-rate formula expanded.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Train;
    NormKind variant = NormKind::GroupNorm;
    std::size_t groups = 8;
    std::vector<std::size_t> widths{16, 32, 32};

    DatasetKind dataset = DatasetKind::Cifar10;
    std::string data_dir;       // empty: NORMLAB_DATA
    std::size_t train_subset = 0; // 0: everything
    std::size_t val_subset = 0;
    SyntheticSpec synthetic;

    std::size_t batch_size = 128;
    std::size_t eval_batch_size = 500;
    bool lr_from_formula = true; // lr = 0.1 * batch_size / 128
    OptimizerConfig optimizer;
    std::size_t epochs = 164;
    bool augment_flip = false;
    bool augment_crop = false;

    bool noise = false;
    double noise_mu = 1e-3;
    double noise_sigma = 1.001;

    AnalysisConfig analysis;

    std::uint64_t seed = 0;
    std::string out_dir = "out";
    bool write_checkpoint = true;

    std::string fault_injection; // gradcheck only: name of a check to corrupt
};

// Defaults for a kind before any user keys are applied.
ExperimentConfig defaults_for(ExperimentKind kind);

// Applies the keys of `doc` on top of defaults_for(kind). Unknown keys, keys
// that do not apply to the kind and invalid values throw ConfigError. A
// top-level "experiment" key, if present, must name `kind`.
ExperimentConfig resolve_config(ExperimentKind kind, const nlohmann::json &doc);

// Reads a JSON file (ConfigError if unreadable or malformed).
nlohmann::json read_config_file(const std::filesystem::path &path);

// Every resolved field, suitable for echoing into summary.json.
nlohmann::json to_json(const ExperimentConfig &cfg);

TrainConfig make_train_config(const ExperimentConfig &cfg);
MicroCnnOptions make_model_options(const ExperimentConfig &cfg, int classes);

} // namespace normlab::cli

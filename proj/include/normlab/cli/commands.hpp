#pragma once

#include "normlab/cli/config.hpp"

#include <iosfwd>

namespace normlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailed = 1;
inline constexpr int kExitInputError = 2;

// Each command writes its files into cfg.out_dir and returns an exit code.
// Divergence is a result, not a failure: it is recorded and the code is 0.
int cmd_train(const ExperimentConfig &cfg, std::ostream &log);
int cmd_analyze(const ExperimentConfig &cfg, std::ostream &log);
int cmd_noise(const ExperimentConfig &cfg, std::ostream &log);
int cmd_regularization(const ExperimentConfig &cfg, std::ostream &log);
int cmd_gradcheck(const ExperimentConfig &cfg, std::ostream &log);

// normlab <command> [--config PATH] [--seed N] [--out DIR]
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace normlab::cli

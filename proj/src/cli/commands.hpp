#pragma once

#include "cli/config.hpp"

namespace infedit::cli {

// Exit codes: 0 on success, 2 when a reconstruction exceeds its error
// tolerance; config, capability, and I/O failures throw (the entry point
// turns them into exit code 1).
inline constexpr int kExitOk = 0;
inline constexpr int kExitToleranceExceeded = 2;

// Reconstruction tolerance enforced by cmd_reconstruct's exit status.
inline constexpr double kReconstructTolerance = 1e-9;

int cmd_reconstruct(const ExperimentConfig& cfg);
int cmd_edit(const ExperimentConfig& cfg);
int cmd_compare_samplers(const ExperimentConfig& cfg);
int cmd_metrics(const ExperimentConfig& cfg);

}  // namespace infedit::cli

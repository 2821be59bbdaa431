#pragma once

#include <iosfwd>
#include <string>

#include "mp2rec/config.hpp"
#include "mp2rec/synth.hpp"

namespace mp2rec {

// Command bodies behind the CLI. Each returns 0 on success and reports
// failures by throwing; the binary maps exception types to exit codes
// (numeric divergence -> 3, everything else -> 2).

// Artifact naming under config.out.
std::string checkpoint_path(const RunConfig& config, ModelKind kind, std::uint64_t seed);
std::string train_log_path(const RunConfig& config, ModelKind kind, std::uint64_t seed);
std::string manifest_path(const RunConfig& config, std::uint64_t seed);
std::string metrics_csv_path(const RunConfig& config, const std::string& model,
                             std::uint64_t seed);

// Train one model: split manifest + id maps + per-epoch log + checkpoint +
// a replayable copy of the effective config.
int cmd_train(const RunConfig& config, std::ostream& out);

// Score a checkpoint against a split manifest; empty paths derive the
// defaults cmd_train wrote for config.model / config seed.
int cmd_eval(const RunConfig& config, const std::string& checkpoint,
             const std::string& manifest, std::ostream& out);

// Alpha (x beta) sweep, metrics averaged over config.seeds per grid point;
// a failing point becomes a status row and the sweep continues.
int cmd_grid(const RunConfig& config, std::ostream& out);

// Paper-style comparison table over the configured model list, tuned frozen
// defaults per model, mean over config.seeds, reference cells attached.
int cmd_reproduce(const RunConfig& config, std::ostream& out);

// Writes the synthetic ratings file used as the desk-scale dataset.
int cmd_synth(const std::string& path, const SyntheticSpec& spec, std::ostream& out);

// The default 8-point momentum sweep used when the config lists no alphas.
const std::vector<double>& default_alpha_grid();

}  // namespace mp2rec

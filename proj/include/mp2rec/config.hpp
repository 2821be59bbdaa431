#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mp2rec/data.hpp"
#include "mp2rec/model.hpp"

namespace mp2rec {

// Everything one run needs, loadable from a flat `key = value` file. The
// schema is closed: an unknown key is an error, so a typo in a sweep config
// fails loudly instead of silently running defaults.
struct RunConfig {
    std::string dataset;                       // ratings file (resolved against the data root)
    RatingsFormat format = RatingsFormat::Ml100kTab;
    ModelKind model = ModelKind::Mp2;
    Hyperparams hyper;
    std::string out = ".";                     // output directory
    double threshold = 3.0;                    // binarization cut
    std::size_t pairs_per_user = 10;
    std::size_t negatives_per_user = 100;
    std::vector<std::size_t> ks = {5, 20};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};  // grid / reproduce
    int threads = 1;
    std::vector<double> alphas;                // grid sweep; empty = default 8-point grid
    std::vector<double> betas;                 // optional second grid axis
    std::vector<ModelKind> models;             // reproduce list; empty = all six
    std::string reference = "ml-100k";         // paper-cell table for reproduce ("none" to skip)
    std::string constants;                     // override path of the reference constants file
};

// Parses `key = value` lines ('#' comment lines and blank lines allowed).
// Throws ParseError with the line number on unknown keys, duplicate keys, or
// unparsable values.
RunConfig parse_config(std::istream& in, const std::string& name);
RunConfig load_config(const std::string& path);

// Applies one key=value pair (shared by the file parser and CLI overrides).
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value,
                        const std::string& where);

// Round-trips through parse_config; persisted next to run outputs so a run
// can be replayed exactly.
std::string config_to_text(const RunConfig& config);

// `dataset` joined with $MP2REC_DATA_ROOT when the path is relative and the
// variable is set.
std::string resolve_dataset_path(const std::string& dataset);

}  // namespace mp2rec

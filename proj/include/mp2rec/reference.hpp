#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mp2rec/model.hpp"

namespace mp2rec {

// Published comparison numbers and the frozen per-model training defaults.
// Both live in data/reference.cfg; the compiled-in copy below keeps the
// tools usable when the file is not on the search path, and a unit test
// pins file and code to each other.

struct ReferenceCell {
    std::string dataset;  // "ml-100k" | "ml-1m"
    std::string model;    // kind_name() spelling
    std::string metric;   // "hr" | "ndcg"
    std::size_t k = 0;
    double value = 0.0;
};

struct ReferenceTable {
    std::vector<ReferenceCell> cells;

    std::optional<double> lookup(const std::string& dataset, const std::string& model,
                                 const std::string& metric, std::size_t k) const;
};

// Compiled-in copy of the constants.
const ReferenceTable& builtin_reference();

// Frozen training defaults for one model kind (tuned once, desk scale).
// The seed is left at the caller's value.
Hyperparams tuned_defaults(ModelKind kind);

// Parses a constants file (same `key = value` grammar as run configs; keys
// `ref.<dataset>.<model>.<metric><k>` and `default.<model>.<field>`).
// `apply_defaults` then overlays any `default.` entries onto tuned_defaults.
struct ConstantsFile {
    ReferenceTable table;
    std::vector<std::pair<std::string, std::string>> default_entries;  // key suffix, value
};

ConstantsFile parse_constants(std::istream& in, const std::string& name);
ConstantsFile load_constants(const std::string& path);

// Search order: explicit path (error if unreadable), $MP2REC_CONSTANTS,
// ./data/reference.cfg, then the source-tree copy baked in at build time.
// Falls back to the compiled-in table when nothing is found.
ConstantsFile locate_constants(const std::string& explicit_path);

Hyperparams apply_tuned_defaults(ModelKind kind, const ConstantsFile& constants);

}  // namespace mp2rec

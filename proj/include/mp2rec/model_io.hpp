#pragma once

#include <iosfwd>
#include <string>

#include "mp2rec/model.hpp"

namespace mp2rec {

// Self-describing binary checkpoint: magic + version, the full hyperparameter
// block, id-space sizes, the remap hash, and every tower matrix with its
// shape. Scalars are little-endian fixed-width; a FNV-1a checksum of the
// payload closes the file. Save/load round-trips bit for bit.

void write_checkpoint(std::ostream& os, const ModelState& model);

// Throws FormatError on bad magic, unknown version, shape inconsistencies,
// truncation, or checksum mismatch.
ModelState read_checkpoint(std::istream& is);

void save_checkpoint(const std::string& path, const ModelState& model);
ModelState load_checkpoint(const std::string& path);

}  // namespace mp2rec

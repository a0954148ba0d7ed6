#pragma once

#include <filesystem>
#include <string>

#include "bdd/instance_gen.hpp"

namespace bdd {

/// Instance plus the spec that generated it, as stored in a snapshot.
struct Snapshot {
  TrialSpec spec;
  Instance instance;
};

/// Single JSON document: dims, seed, snr_db and base64 little-endian float64
/// arrays for r_n, C_n (row-major), truths and y (complex interleaved re, im).
std::string snapshot_to_json(const TrialSpec &spec, const Instance &inst);
Snapshot snapshot_from_json(const std::string &text);

/// File wrappers. Throw IoError on open/write failure.
void save_snapshot(const std::filesystem::path &path, const TrialSpec &spec,
                   const Instance &inst);
Snapshot load_snapshot(const std::filesystem::path &path);

std::string base64_encode(const std::string &bytes);
std::string base64_decode(const std::string &text);

} // namespace bdd

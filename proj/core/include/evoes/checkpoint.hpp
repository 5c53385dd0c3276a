#pragma once

#include "evoes/trainer.hpp"

#include <filesystem>
#include <string>

namespace evoes {

/// Layout (little-endian):
///   "EVES" | u32 version | u64 header length | JSON header |
///   f64 sigma | f64 means[k*d] | f64 adam_m[k*d] | f64 adam_v[k*d] |
///   f64 normalizer_mean[o] | f64 normalizer_m2[o] | f64 grad_norms[g]
/// The header carries the config, the counts k, d, o, g and the integer
/// scalars. Adam moments are written as zeros when the optimizer has not
/// stepped yet.
std::string encode_checkpoint(const Checkpoint& state);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& state, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace evoes

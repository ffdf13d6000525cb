#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "plasma/nn/params.hpp"

namespace plasma::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Versioned checkpoint: magic "PLASMACK", version, kind, JSON metadata,
/// named groups with shapes, little-endian float64 payload and a trailing
/// FNV-1a hash of the parameters.
struct Checkpoint {
    std::string kind;      // "base", "prefix", "classifier"
    std::string metadata;  // JSON text
    ParamSet params;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Hash of a checkpoint file's parameters, read from its trailer.
std::uint64_t checkpoint_hash(const std::string& path);

}  // namespace plasma::nn

#pragma once

#include <string>

#include "relclass/config.hpp"
#include "relclass/model.hpp"

namespace relclass {

// Versioned little-endian binary container: magic, config JSON, the five
// vocabularies in row order, then every tensor (frozen pre table first,
// tuned tensors in visit order) as name + shape + row-major doubles.
// save(load(x)) reproduces x byte for byte.
inline constexpr char kCheckpointMagic[4] = {'R', 'C', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  ModelParams model;
};

void save_checkpoint(const std::string& path, ModelParams& model,
                     const RunConfig& config);

// DataError on malformed/truncated files or schema-version mismatch;
// NumericError when a stored tensor contains non-finite values.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace relclass

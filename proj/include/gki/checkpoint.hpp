#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gki/numeric.hpp"

namespace gki {

/// On-disk layout: the 4-byte magic "GKI1", a little-endian uint64 header
/// length, the JSON header, then every array as raw little-endian float64 in
/// row-major order, in the order the header lists them.
struct Checkpoint {
  struct Array {
    std::string name;
    Matrix value;
  };

  nlohmann::json meta = nlohmann::json::object();  // free-form fields (seed, step, config, ...)
  std::vector<Array> arrays;

  const Array* find(const std::string& name) const;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// Throws DataError on a bad magic string, truncated data or a malformed header.
Checkpoint read_checkpoint(const std::string& path);

}  // namespace gki

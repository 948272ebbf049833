#pragma once

#include <stdexcept>

namespace sce {

// Filesystem-level failures (missing file, short read). Kept distinct from
// std::invalid_argument so the CLI can map them to a different exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sce

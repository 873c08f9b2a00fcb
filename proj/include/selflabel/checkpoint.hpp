#pragma once

#include <string>

#include "selflabel/nn.hpp"

namespace selflabel {

// Versioned binary parameter checkpoint; byte layout in docs/formats.md.
// Writes to a temp file and renames, so a crash never leaves a torn file.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace selflabel

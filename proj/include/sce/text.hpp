#pragma once

#include <string>
#include <vector>

namespace sce {

// Lowercased word tokens: maximal runs of [a-z0-9] after ASCII lowercasing.
// Shared by the hashed embedding provider and the vocabulary builder.
std::vector<std::string> tokenize(const std::string& text);

}  // namespace sce

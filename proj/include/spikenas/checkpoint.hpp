#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "spikenas/layers.hpp"

namespace spikenas {

// Versioned binary container: magic/version, a JSON meta header, then raw
// float tensors in header order. Byte-identical given identical state.
void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<ParamRef<float>>& state);

// Fills the given tensors by name. Throws DataError on magic/version/shape
// mismatch or missing entries. Returns the meta header.
nlohmann::json load_checkpoint(const std::string& path, const std::vector<ParamRef<float>>& state);

// Reads only the meta header.
nlohmann::json peek_checkpoint(const std::string& path);

// Content fingerprint used by manifests and determinism checks.
uint64_t fnv1a64_file(const std::string& path);

}  // namespace spikenas

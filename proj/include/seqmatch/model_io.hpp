#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "seqmatch/trainer.hpp"

namespace seqmatch {

// Training provenance stamped into every model file.
struct ModelProvenance {
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
};

struct LoadedModel {
  std::uint32_t version = 0;
  Model model;
  ModelProvenance provenance;
};

// Single self-describing binary: magic + version header, dimensions, then
// every parameter tensor as explicit little-endian IEEE-754 doubles.
// load(save(m)) reproduces m bit for bit on any host.
void save_model(const std::filesystem::path& path, const Model& model,
                const ModelProvenance& provenance);
LoadedModel load_model(const std::filesystem::path& path);

// FNV-1a over raw text; used to digest config files into provenance.
std::uint64_t text_digest(std::string_view text);

}  // namespace seqmatch

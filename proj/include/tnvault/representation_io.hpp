#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tnvault/representations.hpp"

namespace tnvault {

using AnyRepresentation = std::variant<TTRepresentation, TRRepresentation,
                                       TuckerRepresentation, HTRepresentation>;

/// Everything needed besides the blocks to rebuild a representation.
struct RepresentationStructure {
  Format format = Format::kTT;
  Shape mode_sizes;
  /// TT/TR: R_0..R_N. Tucker: R_1..R_N. HT: one per tree node.
  std::vector<std::size_t> ranks;
  std::string tree;  // HT only, 1-based nested form

  bool operator==(const RepresentationStructure&) const = default;
};

Format format_of(const AnyRepresentation& rep);
RepresentationStructure structure_of(const AnyRepresentation& rep);
/// Structure implied by block shapes alone (TT, TR, Tucker; blocks in
/// blocks_of order).
RepresentationStructure structure_from_shapes(Format format,
                                              const std::vector<Shape>& shapes);

/// Blocks in fragment order: TT/TR core k; Tucker factors 0..N-1 (as
/// [I_k, R_k] tensors) followed by the core; HT blocks by node index.
std::vector<DenseTensor> blocks_of(const AnyRepresentation& rep);
AnyRepresentation assemble(const RepresentationStructure& structure,
                           std::vector<DenseTensor> blocks);

DenseTensor reconstruct(const AnyRepresentation& rep);
std::size_t parameter_count(const AnyRepresentation& rep);
void validate(const AnyRepresentation& rep);

nlohmann::json structure_to_json(const RepresentationStructure& s);
RepresentationStructure structure_from_json(const nlohmann::json& j);

// ".tnc" block: the ".dt" bytes of one block plus "<name>.json" holding
// {format, core_index, ranks, mode_sizes, tree}.
struct TncBlock {
  DenseTensor block;
  RepresentationStructure structure;
  std::size_t core_index = 0;
};

/// Writes core_<k>.tnc and core_<k>.tnc.json for every block; returns the
/// .tnc paths.
std::vector<std::filesystem::path> write_tnc(const std::filesystem::path& dir,
                                             const AnyRepresentation& rep);
TncBlock read_tnc(const std::filesystem::path& path);
/// Reads every core_<k>.tnc in `dir` and assembles the representation.
AnyRepresentation read_tnc_dir(const std::filesystem::path& dir);

}  // namespace tnvault

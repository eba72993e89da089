#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tnvault/decomp.hpp"
#include "tnvault/representation_io.hpp"

namespace tnvault {

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// 32-hex-char id from arbitrary material (first 128 bits of its SHA-256).
/// Used for fragments produced by dispersed operations.
std::string derived_fragment_id(std::string_view material);

struct FragmentEntry {
  std::string fragment_id;   // 128-bit, 32 hex chars
  std::size_t server_id = 0;
  std::string content_hash;  // SHA-256 of the ".dt" bytes
  std::size_t core_index = 0;
  Shape shape;

  bool operator==(const FragmentEntry&) const = default;
};

struct ShareManifest {
  std::string hash_algorithm = "sha256";
  RepresentationStructure structure;
  std::vector<FragmentEntry> fragments;
  /// One seed per mode; empty when no mode permutation was applied. Seed 0
  /// stands for the identity permutation.
  std::vector<std::uint64_t> permutation_seeds;
  /// The shared tensor is permute_axes(original, axis_order); empty means
  /// identity.
  std::vector<std::size_t> axis_order;
  std::size_t n_servers = 0;
  std::string created_at;

  Format scheme() const { return structure.format; }
  const FragmentEntry& fragment(std::size_t core_index) const;

  nlohmann::json to_json() const;
  static ShareManifest from_json(const nlohmann::json& j);
  /// Canonical serialization (sorted keys, no whitespace).
  std::string canonical() const;

  bool operator==(const ShareManifest&) const = default;
};

/// fragment_id -> ".dt" bytes.
using ShareSet = std::map<std::string, std::vector<std::uint8_t>>;

struct SharePackage {
  ShareSet shares;
  ShareManifest manifest;
  DecompositionReport report;
};

struct ShareOptions {
  Format format = Format::kTT;
  double eps = 0.1;                 // TT / TR
  std::vector<std::size_t> ranks;   // Tucker ranks or HT rank map
  std::string tree;                 // HT, empty = balanced
  double delta = 0.05;
  bool randomize = true;            // false = classical decomposition
  std::size_t n_servers = 3;
  bool permute_modes = false;
  bool random_assignment = false;
  std::uint64_t seed = 0;
  std::string created_at;           // empty = current UTC time
};

/// Randomized decomposition, optional mode permutation, server assignment
/// and manifest.
SharePackage generate_shares(const DenseTensor& a, const ShareOptions& opt);

/// Packages an existing representation. Fragment ids derive from `seed`.
SharePackage share_representation(const AnyRepresentation& rep,
                                  std::size_t n_servers, std::uint64_t seed,
                                  bool random_assignment = false,
                                  std::string created_at = {});

/// Permutation of 0..n-1 from a seed (Fisher-Yates); seed 0 is the identity.
std::vector<std::size_t> mode_permutation(std::size_t n, std::uint64_t seed);

/// Reorders the index of every mode k: entry i' of the result carries index
/// perm_k[i'] of the input.
AnyRepresentation permute_modes(const AnyRepresentation& rep,
                                const std::vector<std::uint64_t>& seeds);
AnyRepresentation unpermute_modes(const AnyRepresentation& rep,
                                  const std::vector<std::uint64_t>& seeds);

/// Throws HashMismatch unless `bytes` hash to the entry's content hash.
void verify_fragment(const FragmentEntry& entry,
                     std::span<const std::uint8_t> bytes);

/// Verifies every fragment and rebuilds the representation as stored
/// (still mode-permuted).
AnyRepresentation representation_from_shares(const ShareManifest& manifest,
                                             const ShareSet& shares);
/// Verifies, undoes mode and axis permutations and reconstructs.
DenseTensor reconstruct_from_shares(const ShareManifest& manifest,
                                    const ShareSet& shares);

void write_share_package(const std::filesystem::path& dir,
                         const ShareManifest& manifest, const ShareSet& shares);
ShareManifest read_manifest(const std::filesystem::path& path);
/// Loads whichever fragments of the manifest exist in `dir`.
ShareSet read_fragments(const ShareManifest& manifest,
                        const std::filesystem::path& dir);

/// Each party decomposes its additive share with randomized TT-SVD.
std::vector<TTRepresentation> additive_to_tn(
    const std::vector<DenseTensor>& shares, double eps, double delta,
    const std::vector<std::uint64_t>& seeds);
/// Folded tt_add of all parties' TTs.
TTRepresentation sum_tn(const std::vector<TTRepresentation>& parts);

/// n-1 parties draw U([-amplitude, amplitude]) tensors and express them in
/// TT; the last party's share is reconstruct(tt - sum of theirs).
std::vector<DenseTensor> tn_to_additive(const TTRepresentation& tt,
                                        std::size_t n_parties,
                                        std::uint64_t seed,
                                        double amplitude = 1.0);

std::string utc_timestamp();

}  // namespace tnvault

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tnvault/tensor.hpp"

namespace tnvault {

// ".dt" layout: "DTEN", u8 version (=1), u8 ndims, ndims x u64 LE mode sizes,
// then prod(shape) x f64 LE values in column-major order.
inline constexpr std::uint8_t kDtVersion = 1;

std::vector<std::uint8_t> encode_dt(const DenseTensor& t);
DenseTensor decode_dt(std::span<const std::uint8_t> bytes);

void write_dt(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_dt(const std::filesystem::path& path);

/// 2-D CSV, one line per row of the first mode. Blank lines are skipped.
DenseTensor read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const DenseTensor& t);

/// 8-bit PGM (P2/P5) becomes [height, width]; PPM (P3/P6) becomes
/// [height, width, 3] with the channels stacked on the third mode.
DenseTensor read_pnm(const std::filesystem::path& path);

/// Dispatches on extension: .dt, .csv, .pgm, .ppm.
DenseTensor read_tensor(const std::filesystem::path& path);
bool is_image_path(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace tnvault

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hybasis/volume.hpp"

namespace hybasis {

namespace fs = std::filesystem;

// On-disk layout
//   <stem>.vol.json   {format, version, dims:[x,y,z], n_time, dtype:"float32",
//                      order:"x-fastest", endianness:"little", payload, mask?}
//   <stem>.vol.raw    T frames, each frame Nv little-endian float32 values
//   <stem>.vol.mask   optional, Nv bytes (0/1)
//   <stem>.parc.json  {format, version, dims, dtype:"int32", order, endianness, payload}
//   <stem>.parc.raw   Nv little-endian int32 labels

/// Accepts either the bare stem or a path ending in ".vol.json".
void save_volume(const Volume4D& vol, const fs::path& stem);
Volume4D load_volume(const fs::path& path);

void save_parcellation(const Parcellation& parc, const fs::path& stem);
Parcellation load_parcellation(const fs::path& path,
                               std::size_t min_roi_size = Parcellation::kDefaultMinRoiSize);

/// Strips a known suffix (".vol.json", ".parc.json", ...) from `path`.
fs::path strip_suffix(const fs::path& path, const std::string& suffix);

namespace raw {

void write_f32(const fs::path& file, std::span<const double> values);
std::vector<float> read_f32(const fs::path& file, std::size_t expected_count);

void write_f64(const fs::path& file, std::span<const double> values);
std::vector<double> read_f64(const fs::path& file, std::size_t expected_count);

void write_i32(const fs::path& file, std::span<const std::int32_t> values);
std::vector<std::int32_t> read_i32(const fs::path& file, std::size_t expected_count);

std::vector<unsigned char> read_bytes(const fs::path& file);
void write_bytes(const fs::path& file, std::span<const unsigned char> bytes);

}  // namespace raw

void write_text(const fs::path& file, const std::string& text);
std::string read_text(const fs::path& file);

}  // namespace hybasis

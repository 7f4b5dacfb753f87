#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "focalspec/refocus.hpp"
#include "focalspec/spectrum.hpp"

namespace focalspec {

// Binary containers. All integers and floats are little-endian.
//
// FSTK: "FSTK", u32 version, u32 N_C, u32 H, u32 W, u32 C, f64 d_min,
//       f64 delta_alpha, then f32 data indexed [layer][y][x][c].
// FSSP: "FSSP", same header fields, u32 complex flag (1), then interleaved
//       f32 (re, im) indexed [omega_f][y][omega_x][c]; y selects the row whose
//       slice was transformed.

inline constexpr std::uint32_t kFstkVersion = 1;
inline constexpr std::uint32_t kFsspVersion = 1;

void write_fstk(const std::filesystem::path& path, const FocalStack& stack);
FocalStack read_fstk(const std::filesystem::path& path);

/// Spectra of H rows sharing one shape.
void write_fssp(const std::filesystem::path& path, std::span<const Fss> rows);
std::vector<Fss> read_fssp(const std::filesystem::path& path);

/// Bytes of the FSSP encoding, for parity checks.
std::vector<std::uint8_t> encode_fssp(std::span<const Fss> rows);

/// Provenance sidecar `<path>.json` next to an FSTK/FSSP file.
void write_provenance(const std::filesystem::path& data_path, const FssProvenance& p);
/// Missing sidecar yields an empty optional.
std::optional<FssProvenance> read_provenance(const std::filesystem::path& data_path);

}  // namespace focalspec

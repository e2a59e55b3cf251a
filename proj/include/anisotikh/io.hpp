/**
 * @file io.hpp
 * @brief Result serialization: 8-bit PGM graymaps for eyeballing, flat
 *        little-endian float64 dumps with a JSON sidecar for exact reuse,
 *        and the per-iteration history CSV.
 */

#pragma once

#include <optional>
#include <string>
#include <utility>

#include "anisotikh/types.hpp"

namespace anisotikh {

/// Binary PGM (P5), min-max scaled to 0..255; a constant image maps to 0.
void write_pgm(const std::string& path, const ModelImage& image);

/// Binary PGM (P5) with a fixed value range mapped linearly to 0..255;
/// values outside the range are clamped.
void write_pgm_range(const std::string& path, const ModelImage& image,
                     double lo, double hi);

/// Raw column-stacked float64 values, little-endian regardless of host.
void write_f64(const std::string& path, const ModelImage& image);

/// Sidecar for a .f64 dump: {"n_x", "n_z", "order": "column-stacked", ...}.
void write_f64_sidecar(const std::string& path, const Grid& grid);

/// Read back a .f64 dump produced by write_f64 onto the given grid.
ModelImage read_f64(const std::string& path, const Grid& grid);

/// Write name.pgm / name.f64 / name.json under dir (selectable). fixed_range
/// switches the graymap from min-max to the given range (used for theta).
void write_image_set(const std::string& dir, const std::string& name,
                     const ModelImage& image, bool pgm, bool f64,
                     std::optional<std::pair<double, double>> fixed_range =
                         std::nullopt);

/// CSV with header iter,U,sq_discrepancy,mu,relerr,dxprime_norm,dzprime_norm,
/// one row per record; a missing rel_error is written as nan.
void write_history_csv(const std::string& path, const SolveHistory& history);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace anisotikh

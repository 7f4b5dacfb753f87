#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "focalspec/spectrum.hpp"

namespace focalspec {

/// Apex angle of the cone a scene point traces through the focal stack,
/// 2 * atan(delta_alpha * (N_u - 1) * baseline / 2).
double apex_angle(double delta_alpha, std::size_t num_views, double baseline_unit = 1.0);

/// Apex angle of a continuously sampled focal axis (delta_alpha = 1).
double continuous_apex_angle(std::size_t num_views, double baseline_unit = 1.0);

/// Slope of a view's impulse trajectory in (layer index, x) coordinates.
/// The reference view is a vertical line with no finite slope.
struct Slope {
    double value = 0.0;
    bool vertical = false;
};

Slope spatial_slope(double delta_alpha, std::ptrdiff_t u_i, std::ptrdiff_t u_ref,
                    double baseline_unit = 1.0);
Slope continuous_spatial_slope(std::ptrdiff_t u_i, std::ptrdiff_t u_ref,
                               double baseline_unit = 1.0);

/// Closed-form geometry of a focal stack built from N_u equally spaced views.
struct ConeModel {
    double delta_alpha = 0.01;
    std::size_t num_views = 1;
    std::size_t u_ref = 0;
    double baseline_unit = 1.0;
    /// Physical offsets (u_i - u_ref) * baseline_unit.
    std::vector<double> view_offsets;
    std::vector<Slope> spatial_slopes;
    /// Unit direction (omega_f, omega_x) of each view's spectral line, in
    /// physical frequency units.
    std::vector<std::pair<double, double>> spectral_lines;
    double apex = 0.0;

    static ConeModel make(double delta_alpha, std::size_t num_views, std::size_t u_ref,
                          double baseline_unit = 1.0);
    static ConeModel from_provenance(const FssProvenance& p);

    /// Dense model after inserting M views into every gap: N' = (N - 1)(M + 1) + 1,
    /// baseline / (M + 1). The apex angle is unchanged.
    ConeModel with_inserted_views(std::size_t inserted) const;

    double max_offset() const;
    double min_offset() const;
};

/// Row-major binary mask over FSS bins.
struct SpectralMask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> bits;

    SpectralMask() = default;
    SpectralMask(std::size_t r, std::size_t c, bool fill = false)
        : rows(r), cols(c), bits(r * c, fill ? 1 : 0) {}

    bool at(std::size_t i, std::size_t j) const { return bits[i * cols + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v = true) { bits[i * cols + j] = v ? 1 : 0; }
    std::size_t count() const;
    bool operator==(const SpectralMask&) const = default;
};

/// A view's spectral line rasterized on an FSS grid.
struct SpectralLine {
    double view_offset = 0.0;
    /// d(row offset) / d(col offset) in bin units.
    double bin_slope = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> bins;
};

/// Bin slope of the line for a view at `offset`: the spatial line x = c + f*offset
/// concentrates on omega_f + offset * omega_x = 0. With omega_f bins spaced
/// 1/(rows * delta_alpha) and omega_x bins 1/cols, row = -offset*delta_alpha*rows/cols * col.
double spectral_bin_slope(double offset, double delta_alpha, std::size_t rows, std::size_t cols);

/// One rasterized line per view through DC: bins within 0.5 bin (perpendicular
/// distance) of the ideal line. Bins without a mirror image are skipped, so
/// the set is point-symmetric about DC.
std::vector<SpectralLine> predict_spectral_lines(const ConeModel& model, std::size_t rows,
                                                 std::size_t cols);

/// Union of the predicted lines, dilated by `radius` bins (square element).
SpectralMask line_mask(const ConeModel& model, std::size_t rows, std::size_t cols,
                       std::size_t radius = 1);

/// Double wedge swept by every line between the outermost view offsets,
/// dilated by `radius` bins.
SpectralMask support_mask(const ConeModel& model, std::size_t rows, std::size_t cols,
                          std::size_t radius = 1);

/// Share of non-DC spectral energy inside the mask, bins of the patch x patch
/// DC block excluded from both sums. Empty when there is no non-DC energy.
std::optional<double> energy_concentration(const Fss& fss, const SpectralMask& mask,
                                           std::size_t dc_patch = 5);

struct LineDetectionOptions {
    /// Only columns with |col - dc| >= this fraction of cols / 2 vote; near DC
    /// all lines overlap.
    double min_col_fraction = 0.25;
    /// Histogram resolution and search range in units of `offset_unit`.
    double bin_width = 0.05;
    double max_offset = 8.0;
    /// Peaks lower than this fraction of the highest are ignored.
    double min_relative_height = 0.1;
    /// Minimum separation between reported peaks, in units of `offset_unit`.
    double min_separation = 0.5;
};

/// Detects spectral lines by sweeping the line angle through DC: every bin
/// votes with its energy for the view offset whose line passes through it.
/// Returns peak offsets in units of `offset_unit`, ascending.
std::vector<double> detect_spectral_lines(const Fss& fss, double delta_alpha, double offset_unit,
                                          const LineDetectionOptions& options = {});

/// 8-bit PNG of a mask (255 inside).
void write_mask_png(const std::filesystem::path& path, const SpectralMask& mask);

/// Run-length text encoding: "RLE1 rows cols" then alternating run lengths
/// starting with a run of zeros.
std::string encode_mask_rle(const SpectralMask& mask);
SpectralMask decode_mask_rle(const std::string& text);

}  // namespace focalspec

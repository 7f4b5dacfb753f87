#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "focalspec/image.hpp"

namespace focalspec {

/// Disparity interval in pixels per physical baseline unit.
struct DisparityRange {
    double min = 0.0;
    double max = 0.0;
};

/// Horizontal-parallax light field L(u, y, x, c).
///
/// View u sits at physical offset (u - u_ref) * baseline_unit from the
/// reference view. A scene point at disparity d appears in view u at
/// x0 - d * offset(u).
class LightField3D {
public:
    LightField3D() = default;
    LightField3D(std::size_t num_views, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t u_ref, double baseline_unit = 1.0,
                 DisparityRange range = {});

    std::size_t num_views() const noexcept { return num_views_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t u_ref() const noexcept { return u_ref_; }
    double baseline_unit() const noexcept { return baseline_unit_; }
    DisparityRange disparity_range() const noexcept { return range_; }
    void set_disparity_range(DisparityRange range);

    double view_offset(std::size_t u) const noexcept {
        return (static_cast<double>(u) - static_cast<double>(u_ref_)) * baseline_unit_;
    }

    float& at(std::size_t u, std::size_t y, std::size_t x, std::size_t c) {
        return data_[((u * height_ + y) * width_ + x) * channels_ + c];
    }
    float at(std::size_t u, std::size_t y, std::size_t x, std::size_t c) const {
        return data_[((u * height_ + y) * width_ + x) * channels_ + c];
    }

    Image view(std::size_t u) const;
    void set_view(std::size_t u, const Image& image);

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    /// Throws InputError when an intensity is non-finite.
    void check_finite() const;

private:
    std::size_t num_views_ = 0;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::size_t u_ref_ = 0;
    double baseline_unit_ = 1.0;
    DisparityRange range_{};
    std::vector<float> data_;
};

/// Full-parallax light field LF(v, u, y, x, c) on a rectangular view grid.
class LightField4D {
public:
    LightField4D() = default;
    LightField4D(std::size_t num_v, std::size_t num_u, std::size_t height, std::size_t width,
                 std::size_t channels, std::size_t v_ref, std::size_t u_ref,
                 double baseline_unit = 1.0, DisparityRange range = {});

    std::size_t num_v() const noexcept { return num_v_; }
    std::size_t num_u() const noexcept { return num_u_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t v_ref() const noexcept { return v_ref_; }
    std::size_t u_ref() const noexcept { return u_ref_; }
    double baseline_unit() const noexcept { return baseline_unit_; }
    DisparityRange disparity_range() const noexcept { return range_; }

    double u_offset(std::size_t u) const noexcept {
        return (static_cast<double>(u) - static_cast<double>(u_ref_)) * baseline_unit_;
    }
    double v_offset(std::size_t v) const noexcept {
        return (static_cast<double>(v) - static_cast<double>(v_ref_)) * baseline_unit_;
    }

    float& at(std::size_t v, std::size_t u, std::size_t y, std::size_t x, std::size_t c) {
        return data_[(((v * num_u_ + u) * height_ + y) * width_ + x) * channels_ + c];
    }
    float at(std::size_t v, std::size_t u, std::size_t y, std::size_t x, std::size_t c) const {
        return data_[(((v * num_u_ + u) * height_ + y) * width_ + x) * channels_ + c];
    }

    /// The horizontal 3D light field formed by view row v.
    LightField3D horizontal(std::size_t v) const;

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

private:
    std::size_t num_v_ = 0;
    std::size_t num_u_ = 0;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::size_t v_ref_ = 0;
    std::size_t u_ref_ = 0;
    double baseline_unit_ = 1.0;
    DisparityRange range_{};
    std::vector<float> data_;
};

/// Epipolar-plane image E(u, x, c) for one image row.
class Epi {
public:
    Epi() = default;
    Epi(std::size_t num_views, std::size_t width, std::size_t channels, std::size_t u_ref,
        double baseline_unit = 1.0);

    std::size_t num_views() const noexcept { return num_views_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t u_ref() const noexcept { return u_ref_; }
    double baseline_unit() const noexcept { return baseline_unit_; }

    double view_offset(std::size_t u) const noexcept {
        return (static_cast<double>(u) - static_cast<double>(u_ref_)) * baseline_unit_;
    }

    float& at(std::size_t u, std::size_t x, std::size_t c) {
        return data_[(u * width_ + x) * channels_ + c];
    }
    float at(std::size_t u, std::size_t x, std::size_t c) const {
        return data_[(u * width_ + x) * channels_ + c];
    }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

private:
    std::size_t num_views_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::size_t u_ref_ = 0;
    double baseline_unit_ = 1.0;
    std::vector<float> data_;
};

enum class PrimitiveKind { point, textured_plane };

/// One synthetic scene element at a single disparity.
///
/// A point covers one row (or every row when `y` is empty). A textured plane
/// spans scene columns [x, x_end) on every row; its texture is value noise
/// with lattice spacing `texel_size`, seeded by `seed`.
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::point;
    double x = 0.0;
    std::optional<double> y;
    double x_end = 0.0;
    double disparity = 0.0;
    double intensity = 1.0;
    double texture_contrast = 1.0;
    double texel_size = 1.0;
    std::uint64_t seed = 0;
};

struct SyntheticSceneSpec {
    std::size_t width = 0;
    std::size_t height = 1;
    std::size_t num_views = 1;
    std::size_t u_ref = 0;
    std::size_t channels = 1;
    double baseline_unit = 1.0;
    DisparityRange disparity_range{-1.0, 0.98};
    /// Composited in order; later primitives are drawn over earlier ones.
    std::vector<Primitive> primitives;

    void validate() const;
};

/// Parses the JSON scene description used by `focalspec gen`.
SyntheticSceneSpec parse_scene_spec(std::string_view json_text);

LightField3D render_synthetic(const SyntheticSceneSpec& spec);

/// Indices of primitives that fall (partly) outside the frame in some view.
/// Those are clipped by render_synthetic.
std::vector<std::size_t> clipped_primitives(const SyntheticSceneSpec& spec);

Epi extract_epi(const LightField3D& lf, std::size_t y);

/// Inverse of extracting every row: rows[y] becomes image row y.
LightField3D stack_epis(std::span<const Epi> rows, DisparityRange range = {});

/// Keeps views {0, s, 2s, ...}. The baseline grows by s; disparities stay in
/// physical units so the focal axis is shared with the dense light field.
LightField3D downsample_views(const LightField3D& lf, std::size_t factor);

/// Parsed `lightfield.json`.
struct LightFieldManifest {
    std::size_t num_u = 1;
    std::size_t num_v = 1;
    std::size_t u_ref = 0;
    std::size_t v_ref = 0;
    double baseline_unit = 1.0;
    DisparityRange disparity_range{};
};

LightFieldManifest read_manifest(const std::filesystem::path& dir);

using AnyLightField = std::variant<LightField3D, LightField4D>;

/// Loads `view_{v:03}_{u:03}.png|.pfm` files described by `lightfield.json`.
/// Returns a LightField4D only when the manifest declares num_v > 1.
AnyLightField load_lightfield(const std::filesystem::path& dir);

LightField3D load_lightfield3d(const std::filesystem::path& dir);

/// Writes 16-bit PNG views plus the manifest.
void save_lightfield(const std::filesystem::path& dir, const LightField3D& lf);
void save_lightfield(const std::filesystem::path& dir, const LightField4D& lf);

}  // namespace focalspec

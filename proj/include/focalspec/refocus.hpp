#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "focalspec/image.hpp"
#include "focalspec/lightfield.hpp"

namespace focalspec {

enum class BoundaryPolicy {
    /// Divide by the number of views that sampled inside the frame.
    renormalize,
    /// Out-of-frame samples count as zero; always divide by the view count.
    zero,
};

struct RefocusConfig {
    double d_min = -1.0;
    double d_max = 0.98;
    double delta_alpha = 0.01;
    BoundaryPolicy boundary = BoundaryPolicy::renormalize;

    /// round((d_max - d_min) / delta_alpha) + 1.
    std::size_t layer_count() const;
    std::vector<double> focal_axis() const;
    void validate() const;

    /// Config whose axis starts at d_min and has exactly `layers` entries.
    static RefocusConfig with_layers(double d_min, double delta_alpha, std::size_t layers,
                                     BoundaryPolicy boundary = BoundaryPolicy::renormalize);
};

/// Refocused images F(f, y, x, c) over the focal axis f_k = d_min + k * delta_alpha.
/// A per-row slice has height 1.
class FocalStack {
public:
    FocalStack() = default;
    FocalStack(std::size_t layers, std::size_t height, std::size_t width, std::size_t channels,
               double d_min, double delta_alpha);

    std::size_t num_layers() const noexcept { return layers_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    double d_min() const noexcept { return d_min_; }
    double delta_alpha() const noexcept { return delta_alpha_; }
    double focal_value(std::size_t k) const noexcept {
        return d_min_ + static_cast<double>(k) * delta_alpha_;
    }
    std::vector<double> focal_axis() const;

    float& at(std::size_t k, std::size_t y, std::size_t x, std::size_t c) {
        return data_[((k * height_ + y) * width_ + x) * channels_ + c];
    }
    float at(std::size_t k, std::size_t y, std::size_t x, std::size_t c) const {
        return data_[((k * height_ + y) * width_ + x) * channels_ + c];
    }
    /// Number of views that contributed to pixel (k, y, x).
    float& weight(std::size_t k, std::size_t y, std::size_t x) {
        return weights_[(k * height_ + y) * width_ + x];
    }
    float weight(std::size_t k, std::size_t y, std::size_t x) const {
        return weights_[(k * height_ + y) * width_ + x];
    }

    Image layer(std::size_t k) const;
    /// The (layer, x) slice of image row y, as a height-1 stack.
    FocalStack row(std::size_t y) const;
    void set_row(std::size_t y, const FocalStack& slice);

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> weights() const noexcept { return weights_; }

private:
    std::size_t layers_ = 0;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    double d_min_ = 0.0;
    double delta_alpha_ = 0.0;
    std::vector<float> data_;
    std::vector<float> weights_;
};

/// EPI resampled along x, plus a per-(u, x) validity flag.
struct ShearedEpi {
    Epi epi;
    std::vector<std::uint8_t> valid;

    bool is_valid(std::size_t u, std::size_t x) const { return valid[u * epi.width() + x] != 0; }
};

/// output[u, x] = epi[u, x - d * offset(u)], linearly interpolated. Samples
/// that land outside [0, W - 1] are zero and flagged invalid.
ShearedEpi shear_epi(const Epi& epi, double d);

/// One refocused row: pixels (x, c) and the per-x count of valid views.
struct RefocusedRow {
    std::vector<float> pixels;
    std::vector<float> weight;
};

RefocusedRow refocus_layer(const Epi& epi, double f, const RefocusConfig& cfg);

/// Height-1 focal stack of one EPI.
FocalStack build_focal_stack(const Epi& epi, const RefocusConfig& cfg);

/// Full focal stack, rows processed independently on `threads` workers.
FocalStack build_focal_stack(const LightField3D& lf, const RefocusConfig& cfg,
                             unsigned threads = 0);

/// A view row entering the shear-and-integrate sum: which EPI row supplies
/// the content and at which physical offset it is placed.
struct ViewPlacement {
    std::size_t source;
    double offset;
};

/// Shear-and-integrate over an arbitrary set of view placements. This is the
/// common core of plain refocusing and view-inserting completion.
FocalStack integrate_placements(const Epi& epi, std::span<const ViewPlacement> placements,
                                const RefocusConfig& cfg);

/// I(x, y) = mean over (u, v) of LF(u, v, x - d*ou, y - d*ov), bilinear.
Image refocus_4d_direct(const LightField4D& lf, double d,
                        BoundaryPolicy boundary = BoundaryPolicy::renormalize);

/// Same image computed as a horizontal refocus of each view row followed by a
/// vertical refocus over rows.
Image refocus_4d_two_stage(const LightField4D& lf, double d,
                           BoundaryPolicy boundary = BoundaryPolicy::renormalize);

}  // namespace focalspec

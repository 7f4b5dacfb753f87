#include "focalspec/refocus.hpp"

#include <algorithm>
#include <cmath>

#include "focalspec/error.hpp"
#include "focalspec/parallel.hpp"

namespace focalspec {
namespace {

/// Linear-interpolation coordinates of position s on a grid of n samples.
/// Positions outside [0, n - 1] (beyond a rounding tolerance) are invalid.
struct Tap {
    std::size_t i0 = 0;
    double t = 0.0;
    bool valid = false;
};

Tap tap_at(double s, std::size_t n) {
    constexpr double eps = 1e-9;
    const double last = static_cast<double>(n) - 1.0;
    if (!(s >= -eps && s <= last + eps)) return {};
    s = std::clamp(s, 0.0, last);
    const double base = std::floor(s);
    Tap tap{static_cast<std::size_t>(base), s - base, true};
    if (tap.i0 + 1 >= n) {
        tap.i0 = n - 1;
        tap.t = 0.0;
    }
    return tap;
}

double lerp_at(const Tap& tap, std::size_t stride, const float* base) {
    const double a = base[tap.i0 * stride];
    if (tap.t == 0.0) return a;
    return a + tap.t * (static_cast<double>(base[(tap.i0 + 1) * stride]) - a);
}

std::vector<ViewPlacement> real_placements(const Epi& epi) {
    std::vector<ViewPlacement> out(epi.num_views());
    for (std::size_t u = 0; u < epi.num_views(); ++u) out[u] = {u, epi.view_offset(u)};
    return out;
}

/// Integrates one focal layer into `pixels` (x, c) and `weight` (x).
void integrate_layer(const Epi& epi, std::span<const ViewPlacement> placements, double f,
                     BoundaryPolicy boundary, float* pixels, float* weight) {
    const std::size_t w = epi.width();
    const std::size_t nc = epi.channels();
    std::vector<double> acc(nc);
    for (std::size_t x = 0; x < w; ++x) {
        std::fill(acc.begin(), acc.end(), 0.0);
        std::size_t count = 0;
        for (const auto& p : placements) {
            const Tap tap = tap_at(static_cast<double>(x) - f * p.offset, w);
            if (!tap.valid) continue;
            ++count;
            const float* row = &epi.data()[p.source * w * nc];
            for (std::size_t c = 0; c < nc; ++c) acc[c] += lerp_at(tap, nc, row + c);
        }
        double denom = 0.0;
        if (boundary == BoundaryPolicy::renormalize) {
            denom = static_cast<double>(count);
        } else {
            denom = static_cast<double>(placements.size());
        }
        for (std::size_t c = 0; c < nc; ++c) {
            pixels[x * nc + c] = denom > 0.0 ? static_cast<float>(acc[c] / denom) : 0.0f;
        }
        weight[x] = static_cast<float>(count);
    }
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t RefocusConfig::layer_count() const {
    validate();
    return static_cast<std::size_t>(std::llround((d_max - d_min) / delta_alpha)) + 1;
}

std::vector<double> RefocusConfig::focal_axis() const {
    const std::size_t n = layer_count();
    std::vector<double> axis(n);
    for (std::size_t k = 0; k < n; ++k) axis[k] = d_min + static_cast<double>(k) * delta_alpha;
    return axis;
}

void RefocusConfig::validate() const {
    if (!(delta_alpha > 0.0) || !std::isfinite(delta_alpha)) {
        throw InputError("delta_alpha must be positive");
    }
    if (!std::isfinite(d_min) || !std::isfinite(d_max)) throw InputError("focal range must be finite");
    if (d_min > d_max) throw InputError("d_min must not exceed d_max");
}

RefocusConfig RefocusConfig::with_layers(double d_min, double delta_alpha, std::size_t layers,
                                         BoundaryPolicy boundary) {
    if (layers == 0) throw InputError("layer count must be positive");
    RefocusConfig cfg{d_min, d_min + static_cast<double>(layers - 1) * delta_alpha, delta_alpha,
                      boundary};
    cfg.validate();
    return cfg;
}

FocalStack::FocalStack(std::size_t layers, std::size_t height, std::size_t width,
                       std::size_t channels, double d_min, double delta_alpha)
    : layers_(layers), height_(height), width_(width), channels_(channels), d_min_(d_min),
      delta_alpha_(delta_alpha), data_(layers * height * width * channels, 0.0f),
      weights_(layers * height * width, 0.0f) {}

std::vector<double> FocalStack::focal_axis() const {
    std::vector<double> axis(layers_);
    for (std::size_t k = 0; k < layers_; ++k) axis[k] = focal_value(k);
    return axis;
}

Image FocalStack::layer(std::size_t k) const {
    Image image(height_, width_, channels_);
    const std::size_t n = height_ * width_ * channels_;
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(k * n), n, image.data().begin());
    return image;
}

FocalStack FocalStack::row(std::size_t y) const {
    if (y >= height_) throw InputError("row " + std::to_string(y) + " out of range");
    FocalStack out(layers_, 1, width_, channels_, d_min_, delta_alpha_);
    const std::size_t n = width_ * channels_;
    for (std::size_t k = 0; k < layers_; ++k) {
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>((k * height_ + y) * n), n,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(k * n));
        std::copy_n(weights_.begin() + static_cast<std::ptrdiff_t>((k * height_ + y) * width_),
                    width_, out.weights_.begin() + static_cast<std::ptrdiff_t>(k * width_));
    }
    return out;
}

void FocalStack::set_row(std::size_t y, const FocalStack& slice) {
    if (y >= height_ || slice.height_ != 1 || slice.layers_ != layers_ || slice.width_ != width_ ||
        slice.channels_ != channels_) {
        throw InputError("slice does not fit the focal stack");
    }
    const std::size_t n = width_ * channels_;
    for (std::size_t k = 0; k < layers_; ++k) {
        std::copy_n(slice.data_.begin() + static_cast<std::ptrdiff_t>(k * n), n,
                    data_.begin() + static_cast<std::ptrdiff_t>((k * height_ + y) * n));
        std::copy_n(slice.weights_.begin() + static_cast<std::ptrdiff_t>(k * width_), width_,
                    weights_.begin() + static_cast<std::ptrdiff_t>((k * height_ + y) * width_));
    }
}

// ---------------------------------------------------------------------------

ShearedEpi shear_epi(const Epi& epi, double d) {
    if (!std::isfinite(d)) throw InputError("shear disparity must be finite");
    ShearedEpi out{Epi(epi.num_views(), epi.width(), epi.channels(), epi.u_ref(), epi.baseline_unit()),
                   std::vector<std::uint8_t>(epi.num_views() * epi.width(), 0)};
    const std::size_t w = epi.width();
    const std::size_t nc = epi.channels();
    for (std::size_t u = 0; u < epi.num_views(); ++u) {
        const double offset = epi.view_offset(u);
        const float* row = &epi.data()[u * w * nc];
        for (std::size_t x = 0; x < w; ++x) {
            const Tap tap = tap_at(static_cast<double>(x) - d * offset, w);
            if (!tap.valid) continue;
            out.valid[u * w + x] = 1;
            for (std::size_t c = 0; c < nc; ++c) {
                out.epi.at(u, x, c) = static_cast<float>(lerp_at(tap, nc, row + c));
            }
        }
    }
    return out;
}

RefocusedRow refocus_layer(const Epi& epi, double f, const RefocusConfig& cfg) {
    if (!std::isfinite(f)) throw InputError("focal disparity must be finite");
    RefocusedRow row{std::vector<float>(epi.width() * epi.channels()),
                     std::vector<float>(epi.width())};
    const auto placements = real_placements(epi);
    integrate_layer(epi, placements, f, cfg.boundary, row.pixels.data(), row.weight.data());
    return row;
}

FocalStack integrate_placements(const Epi& epi, std::span<const ViewPlacement> placements,
                                const RefocusConfig& cfg) {
    const std::size_t layers = cfg.layer_count();
    FocalStack stack(layers, 1, epi.width(), epi.channels(), cfg.d_min, cfg.delta_alpha);
    for (const auto& p : placements) {
        if (p.source >= epi.num_views()) throw InputError("view placement source out of range");
    }
    for (std::size_t k = 0; k < layers; ++k) {
        integrate_layer(epi, placements, stack.focal_value(k), cfg.boundary,
                        &stack.at(k, 0, 0, 0), &stack.weight(k, 0, 0));
    }
    return stack;
}

FocalStack build_focal_stack(const Epi& epi, const RefocusConfig& cfg) {
    const auto placements = real_placements(epi);
    return integrate_placements(epi, placements, cfg);
}

FocalStack build_focal_stack(const LightField3D& lf, const RefocusConfig& cfg, unsigned threads) {
    FocalStack stack(cfg.layer_count(), lf.height(), lf.width(), lf.channels(), cfg.d_min,
                     cfg.delta_alpha);
    parallel_for(lf.height(), threads, [&](std::size_t y) {
        stack.set_row(y, build_focal_stack(extract_epi(lf, y), cfg));
    });
    return stack;
}

// ---------------------------------------------------------------------------

Image refocus_4d_direct(const LightField4D& lf, double d, BoundaryPolicy boundary) {
    const std::size_t h = lf.height(), w = lf.width(), nc = lf.channels();
    Image out(h, w, nc);
    std::vector<double> acc(nc);
    const std::size_t view_stride = h * w * nc;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            std::fill(acc.begin(), acc.end(), 0.0);
            std::size_t count = 0;
            for (std::size_t v = 0; v < lf.num_v(); ++v) {
                const Tap ty = tap_at(static_cast<double>(y) - d * lf.v_offset(v), h);
                if (!ty.valid) continue;
                for (std::size_t u = 0; u < lf.num_u(); ++u) {
                    const Tap tx = tap_at(static_cast<double>(x) - d * lf.u_offset(u), w);
                    if (!tx.valid) continue;
                    ++count;
                    const float* view = &lf.data()[(v * lf.num_u() + u) * view_stride];
                    for (std::size_t c = 0; c < nc; ++c) {
                        const double top = lerp_at(tx, nc, view + ty.i0 * w * nc + c);
                        double value = top;
                        if (ty.t != 0.0) {
                            const double bottom = lerp_at(tx, nc, view + (ty.i0 + 1) * w * nc + c);
                            value = top + ty.t * (bottom - top);
                        }
                        acc[c] += value;
                    }
                }
            }
            const double denom = boundary == BoundaryPolicy::renormalize
                                     ? static_cast<double>(count)
                                     : static_cast<double>(lf.num_u() * lf.num_v());
            for (std::size_t c = 0; c < nc; ++c) {
                out.at(y, x, c) = denom > 0.0 ? static_cast<float>(acc[c] / denom) : 0.0f;
            }
        }
    }
    return out;
}

Image refocus_4d_two_stage(const LightField4D& lf, double d, BoundaryPolicy boundary) {
    const std::size_t h = lf.height(), w = lf.width(), nc = lf.channels();
    const std::size_t nv = lf.num_v(), nu = lf.num_u();
    const std::size_t view_stride = h * w * nc;

    // Stage 1: horizontal refocus of every view row -> LF3D(v, y, x, c).
    std::vector<double> stage1(nv * h * w * nc, 0.0);
    for (std::size_t v = 0; v < nv; ++v) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                double* dst = &stage1[((v * h + y) * w + x) * nc];
                std::size_t count = 0;
                for (std::size_t u = 0; u < nu; ++u) {
                    const Tap tx = tap_at(static_cast<double>(x) - d * lf.u_offset(u), w);
                    if (!tx.valid) continue;
                    ++count;
                    const float* row = &lf.data()[(v * nu + u) * view_stride + y * w * nc];
                    for (std::size_t c = 0; c < nc; ++c) dst[c] += lerp_at(tx, nc, row + c);
                }
                const double denom = boundary == BoundaryPolicy::renormalize
                                         ? static_cast<double>(count)
                                         : static_cast<double>(nu);
                for (std::size_t c = 0; c < nc; ++c) dst[c] = denom > 0.0 ? dst[c] / denom : 0.0;
            }
        }
    }

    // Stage 2: vertical refocus over view rows.
    Image out(h, w, nc);
    std::vector<double> acc(nc);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            std::fill(acc.begin(), acc.end(), 0.0);
            std::size_t count = 0;
            for (std::size_t v = 0; v < nv; ++v) {
                const Tap ty = tap_at(static_cast<double>(y) - d * lf.v_offset(v), h);
                if (!ty.valid) continue;
                ++count;
                for (std::size_t c = 0; c < nc; ++c) {
                    const double top = stage1[((v * h + ty.i0) * w + x) * nc + c];
                    double value = top;
                    if (ty.t != 0.0) {
                        const double bottom = stage1[((v * h + ty.i0 + 1) * w + x) * nc + c];
                        value = top + ty.t * (bottom - top);
                    }
                    acc[c] += value;
                }
            }
            const double denom = boundary == BoundaryPolicy::renormalize
                                     ? static_cast<double>(count)
                                     : static_cast<double>(nv);
            for (std::size_t c = 0; c < nc; ++c) {
                out.at(y, x, c) = denom > 0.0 ? static_cast<float>(acc[c] / denom) : 0.0f;
            }
        }
    }
    return out;
}

}  // namespace focalspec

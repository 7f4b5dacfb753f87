#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "focalspec/image.hpp"
#include "focalspec/refocus.hpp"
#include "focalspec/spectrum.hpp"

namespace focalspec {

/// PSNR in dB. Identical inputs have no finite PSNR and are flagged instead.
struct Psnr {
    double db = 0.0;
    bool infinite = false;

    static Psnr inf() { return {0.0, true}; }
    std::string str() const;
};

Psnr psnr(const Image& a, const Image& b, double peak = 1.0);

struct SsimParams {
    std::size_t window = 8;
    double k1 = 0.01;
    double k2 = 0.03;
    double peak = 1.0;
};

/// Mean SSIM over all window positions (stride 1, uniform weights), averaged
/// over channels.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

/// |E_gt - E_out| / E_gt with E = sum |F|^2 over every bin and channel.
double spectral_energy_loss(const Fss& gt, const Fss& out);

struct LayerMetrics {
    double f = 0.0;
    Psnr psnr;
    double ssim = 0.0;
    /// Empty when exactly one of the two compared PSNRs is infinite.
    std::optional<double> rel_psnr;
    std::optional<double> rel_ssim;
};

struct LayerReport {
    std::vector<LayerMetrics> layers;
    /// Mean over layers with finite PSNR; empty when every layer is infinite.
    std::optional<double> mean_psnr;
    double mean_ssim = 0.0;
    std::optional<double> mean_rel_psnr;
    std::optional<double> mean_rel_ssim;
    std::optional<double> spectral_energy_loss;
};

/// Per-layer PSNR/SSIM of `out` against `gt` (same shape and focal axis).
LayerReport evaluate_stack(const FocalStack& out, const FocalStack& gt,
                           const SsimParams& params = {}, unsigned threads = 0);

/// Per-layer differences output - input of every metric.
LayerReport relative_metrics(const LayerReport& output, const LayerReport& input);

/// Columns: layer,f,psnr_db,ssim,rel_psnr_db,rel_ssim. Infinite PSNR is
/// written as "inf", missing values as "".
std::string report_csv(const LayerReport& report);
std::string report_json(const LayerReport& report);

}  // namespace focalspec

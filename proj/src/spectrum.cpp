#include "focalspec/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "focalspec/error.hpp"

namespace focalspec {
namespace {

/// FFTW plans keyed by (rows, cols, sign); cols == 0 marks a 1D plan. The
/// planner is not thread-safe, so creation is serialized; executing a plan on
/// fresh arrays through fftw_execute_dft is safe from any thread.
class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t rows, std::size_t cols, int sign) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(rows, cols, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        const std::size_t n = rows * (cols == 0 ? 1 : cols);
        auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        fftw_plan plan = cols == 0
                             ? fftw_plan_dft_1d(static_cast<int>(rows), buf, buf, sign,
                                                FFTW_ESTIMATE | FFTW_UNALIGNED)
                             : fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf,
                                                buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        if (!plan) throw std::runtime_error("FFTW planning failed");
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

void execute(fftw_plan plan, std::span<Complex> data) {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
}

/// out[(i + rows/2) % rows][(j + cols/2) % cols] = in[i][j] (shift = true),
/// or the inverse permutation.
void recenter(std::span<Complex> plane, std::size_t rows, std::size_t cols, bool to_center) {
    std::vector<Complex> tmp(plane.begin(), plane.end());
    const std::size_t di = rows / 2, dj = cols / 2;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t ci = (i + di) % rows;
            const std::size_t cj = (j + dj) % cols;
            if (to_center) {
                plane[ci * cols + cj] = tmp[i * cols + j];
            } else {
                plane[i * cols + j] = tmp[ci * cols + cj];
            }
        }
    }
}

}  // namespace

Fss::Fss(std::size_t rows, std::size_t cols, std::size_t channels, FssProvenance provenance)
    : rows_(rows), cols_(cols), channels_(channels), provenance_(provenance),
      data_(rows * cols * channels) {}

void centered_dft2(std::span<Complex> plane, std::size_t rows, std::size_t cols, bool inverse) {
    if (plane.size() != rows * cols || rows == 0 || cols == 0) {
        throw InputError("DFT plane size does not match its dimensions");
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows * cols));
    if (inverse) recenter(plane, rows, cols, false);
    execute(plan_cache().get(rows, cols, inverse ? FFTW_BACKWARD : FFTW_FORWARD), plane);
    for (auto& v : plane) v *= scale;
    if (!inverse) recenter(plane, rows, cols, true);
}

void dft1(std::span<Complex> line, bool inverse) {
    if (line.empty()) return;
    execute(plan_cache().get(line.size(), 0, inverse ? FFTW_BACKWARD : FFTW_FORWARD), line);
    const double scale = 1.0 / std::sqrt(static_cast<double>(line.size()));
    for (auto& v : line) v *= scale;
}

Fss fss_forward(const FocalStack& slice, const FssProvenance& views) {
    if (slice.height() != 1) throw InputError("fss_forward expects a single-row focal stack slice");
    FssProvenance prov = views;
    prov.delta_alpha = slice.delta_alpha();
    prov.d_min = slice.d_min();
    Fss fss(slice.num_layers(), slice.width(), slice.channels(), prov);
    for (std::size_t c = 0; c < slice.channels(); ++c) {
        auto plane = fss.plane(c);
        for (std::size_t i = 0; i < slice.num_layers(); ++i) {
            for (std::size_t j = 0; j < slice.width(); ++j) {
                const float v = slice.at(i, 0, j, c);
                if (!std::isfinite(v)) throw InputError("focal stack slice contains a non-finite value");
                plane[i * slice.width() + j] = Complex(v, 0.0);
            }
        }
        centered_dft2(plane, fss.rows(), fss.cols(), false);
    }
    return fss;
}

InverseResult fss_inverse(const Fss& fss) {
    const auto& prov = fss.provenance();
    InverseResult result{FocalStack(fss.rows(), 1, fss.cols(), fss.channels(), prov.d_min,
                                    prov.delta_alpha)};
    double imag_sq = 0.0, real_sq = 0.0;
    std::vector<Complex> plane;
    for (std::size_t c = 0; c < fss.channels(); ++c) {
        const auto src = fss.plane(c);
        plane.assign(src.begin(), src.end());
        centered_dft2(plane, fss.rows(), fss.cols(), true);
        for (std::size_t i = 0; i < fss.rows(); ++i) {
            for (std::size_t j = 0; j < fss.cols(); ++j) {
                const Complex v = plane[i * fss.cols() + j];
                result.slice.at(i, 0, j, c) = static_cast<float>(v.real());
                real_sq += v.real() * v.real();
                imag_sq += v.imag() * v.imag();
            }
        }
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, fss.data().size()));
    result.imaginary_rms = std::sqrt(imag_sq / n);
    result.signal_rms = std::sqrt(real_sq / n);
    result.symmetry_warning = result.imaginary_rms > 1e-3 * result.signal_rms &&
                              result.imaginary_rms > 0.0;
    return result;
}

double conj_symmetry_residual(const Fss& fss) {
    if (fss.channels() == 0 || fss.rows() == 0 || fss.cols() == 0) return 0.0;
    const auto rows = static_cast<std::ptrdiff_t>(fss.rows());
    const auto cols = static_cast<std::ptrdiff_t>(fss.cols());
    const auto i0 = static_cast<std::ptrdiff_t>(fss.dc_row());
    const auto j0 = static_cast<std::ptrdiff_t>(fss.dc_col());
    double total = 0.0;
    for (std::size_t c = 0; c < fss.channels(); ++c) {
        double sum = 0.0;
        for (std::ptrdiff_t i = 0; i < rows; ++i) {
            const std::ptrdiff_t mi = 2 * i0 - i;
            if (mi < 0 || mi >= rows) continue;
            for (std::ptrdiff_t j = 0; j < cols; ++j) {
                const std::ptrdiff_t mj = 2 * j0 - j;
                if (mj < 0 || mj >= cols) continue;
                sum += std::abs(fss.at(c, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) -
                                std::conj(fss.at(c, static_cast<std::size_t>(mi),
                                                 static_cast<std::size_t>(mj))));
            }
        }
        total += sum / static_cast<double>(rows * cols);
    }
    return total / static_cast<double>(fss.channels());
}

Fss dc_patch_replace(const Fss& output, const Fss& input, std::size_t patch) {
    if (!output.same_shape(input)) throw InputError("dc_patch_replace: spectra differ in shape");
    if (patch % 2 == 0) throw InputError("DC patch size must be odd");
    if (patch > output.rows() || patch > output.cols()) {
        throw InputError("DC patch exceeds the spectrum dimensions");
    }
    Fss result = output;
    const std::size_t half = patch / 2;
    for (std::size_t c = 0; c < output.channels(); ++c) {
        for (std::size_t i = output.dc_row() - half; i <= output.dc_row() + half; ++i) {
            for (std::size_t j = output.dc_col() - half; j <= output.dc_col() + half; ++j) {
                result.at(c, i, j) = input.at(c, i, j);
            }
        }
    }
    return result;
}

Image log_magnitude_image(const Fss& fss, std::size_t channel) {
    if (channel >= fss.channels()) throw InputError("channel out of range");
    Image image(fss.rows(), fss.cols(), 1);
    double peak = 0.0;
    for (std::size_t i = 0; i < fss.rows(); ++i) {
        for (std::size_t j = 0; j < fss.cols(); ++j) {
            const double v = std::log1p(std::abs(fss.at(channel, i, j)));
            image.at(i, j, 0) = static_cast<float>(v);
            peak = std::max(peak, v);
        }
    }
    if (peak > 0.0) {
        for (auto& v : image.data()) v = static_cast<float>(v / peak);
    }
    return image;
}

}  // namespace focalspec

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "focalspec/image.hpp"
#include "focalspec/refocus.hpp"

namespace focalspec {

using Complex = std::complex<double>;

/// Where a spectrum came from; needed to place the predicted view lines.
struct FssProvenance {
    double delta_alpha = 0.0;
    double d_min = 0.0;
    std::size_t num_views = 0;
    std::size_t u_ref = 0;
    double baseline_unit = 1.0;
};

/// Centered 2D spectrum of a (layer, x) focal-stack slice, one plane per
/// channel. Row index is the omega_f bin, column index the omega_x bin; the
/// zero frequency sits at (rows / 2, cols / 2).
class Fss {
public:
    Fss() = default;
    Fss(std::size_t rows, std::size_t cols, std::size_t channels, FssProvenance provenance = {});

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t dc_row() const noexcept { return rows_ / 2; }
    std::size_t dc_col() const noexcept { return cols_ / 2; }
    const FssProvenance& provenance() const noexcept { return provenance_; }
    void set_provenance(const FssProvenance& p) { provenance_ = p; }

    Complex& at(std::size_t c, std::size_t i, std::size_t j) {
        return data_[(c * rows_ + i) * cols_ + j];
    }
    const Complex& at(std::size_t c, std::size_t i, std::size_t j) const {
        return data_[(c * rows_ + i) * cols_ + j];
    }
    std::span<Complex> plane(std::size_t c) {
        return std::span<Complex>(data_).subspan(c * rows_ * cols_, rows_ * cols_);
    }
    std::span<const Complex> plane(std::size_t c) const {
        return std::span<const Complex>(data_).subspan(c * rows_ * cols_, rows_ * cols_);
    }

    std::span<Complex> data() noexcept { return data_; }
    std::span<const Complex> data() const noexcept { return data_; }

    bool same_shape(const Fss& o) const noexcept {
        return rows_ == o.rows_ && cols_ == o.cols_ && channels_ == o.channels_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t channels_ = 0;
    FssProvenance provenance_{};
    std::vector<Complex> data_;
};

/// Unitary 2D DFT of a real rows x cols plane in place, with the zero
/// frequency moved to (rows / 2, cols / 2) (inverse=false), or the inverse
/// mapping (inverse=true). Safe to call concurrently.
void centered_dft2(std::span<Complex> plane, std::size_t rows, std::size_t cols, bool inverse);

/// Unitary 1D DFT in natural (uncentered) order.
void dft1(std::span<Complex> line, bool inverse);

/// Spectrum of a height-1 focal stack. Provenance delta_alpha and d_min are
/// taken from the stack; view metadata from `views`.
Fss fss_forward(const FocalStack& slice, const FssProvenance& views = {});

struct InverseResult {
    FocalStack slice;
    double imaginary_rms = 0.0;
    double signal_rms = 0.0;
    /// Imaginary RMS above 1e-3 of the real RMS: the input was not
    /// conjugate-symmetric.
    bool symmetry_warning = false;
};

InverseResult fss_inverse(const Fss& fss);

/// (1 / (rows * cols)) * sum |F(w) - conj(F(-w))|, with -w mirrored about the
/// DC bin, averaged over channels. For even sizes the first row/column has no
/// mirror inside the grid and is skipped.
double conj_symmetry_residual(const Fss& fss);

/// Copies the patch x patch block around DC from `input` into `output`.
Fss dc_patch_replace(const Fss& output, const Fss& input, std::size_t patch = 5);

/// log(1 + |F|) of one channel, normalized to [0, 1] for display.
Image log_magnitude_image(const Fss& fss, std::size_t channel = 0);

}  // namespace focalspec

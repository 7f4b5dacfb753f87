#pragma once

// Slow, independent reference implementations used as test oracles. None of
// these call into the library's numerical code.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include "focalspec/cone_geometry.hpp"
#include "focalspec/lightfield.hpp"
#include "focalspec/refocus.hpp"
#include "focalspec/spectrum.hpp"

namespace oracle {

using cplx = std::complex<double>;

/// Direct O(n^4) unitary DFT with DC moved to (rows/2, cols/2).
inline std::vector<cplx> dft2_centered(const std::vector<double>& x, std::size_t rows, std::size_t cols) {
    std::vector<cplx> out(rows * cols);
    const double norm = 1.0 / std::sqrt(static_cast<double>(rows * cols));
    const auto i0 = static_cast<double>(rows / 2), j0 = static_cast<double>(cols / 2);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            cplx acc = 0.0;
            const double wi = (static_cast<double>(i) - i0) / static_cast<double>(rows);
            const double wj = (static_cast<double>(j) - j0) / static_cast<double>(cols);
            for (std::size_t a = 0; a < rows; ++a) {
                for (std::size_t b = 0; b < cols; ++b) {
                    const double ph = -2.0 * std::numbers::pi * (wi * a + wj * b);
                    acc += x[a * cols + b] * cplx(std::cos(ph), std::sin(ph));
                }
            }
            out[i * cols + j] = acc * norm;
        }
    }
    return out;
}

/// One EPI row of a unit point at disparity d, splatted linearly.
inline std::vector<double> point_row(std::size_t width, double x0, double d, double offset) {
    std::vector<double> row(width, 0.0);
    const double pos = x0 - d * offset;
    const double fl = std::floor(pos);
    const double t = pos - fl;
    const auto i = static_cast<long>(fl);
    if (i >= 0 && i < static_cast<long>(width)) row[static_cast<std::size_t>(i)] += 1.0 - t;
    if (i + 1 >= 0 && i + 1 < static_cast<long>(width) && t > 0.0) row[static_cast<std::size_t>(i + 1)] += t;
    return row;
}

inline focalspec::Epi point_epi(std::size_t n, std::size_t width, std::size_t u_ref, double baseline,
                                double x0, double d) {
    focalspec::Epi epi(n, width, 1, u_ref, baseline);
    for (std::size_t u = 0; u < n; ++u) {
        const auto row = point_row(width, x0, d, (static_cast<double>(u) - static_cast<double>(u_ref)) * baseline);
        for (std::size_t x = 0; x < width; ++x) epi.at(u, x, 0) = static_cast<float>(row[x]);
    }
    return epi;
}

/// Per-pixel refocus: mean over views of the linearly interpolated sample at
/// x - f * offset; samples outside [0, W - 1] count as zero.
inline std::vector<double> refocus_row(const focalspec::Epi& epi, double f) {
    const std::size_t w = epi.width();
    std::vector<double> out(w, 0.0);
    for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t u = 0; u < epi.num_views(); ++u) {
            const double s = static_cast<double>(x) - f * epi.view_offset(u);
            if (s < -1e-9 || s > static_cast<double>(w - 1) + 1e-9) continue;
            const double fl = std::floor(s);
            const double t = s - fl;
            const auto i = static_cast<long>(fl);
            auto px = [&](long k) {
                return k >= 0 && k < static_cast<long>(w) ? static_cast<double>(epi.at(u, static_cast<std::size_t>(k), 0)) : 0.0;
            };
            acc += (1.0 - t) * px(i) + t * px(i + 1);
        }
        out[x] = acc / static_cast<double>(epi.num_views());
    }
    return out;
}

inline std::vector<double> random_plane(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

/// Width of a point's blur in one layer from its spread: N equally weighted
/// views spaced s apart have variance s^2 (N^2 - 1) / 12, plus about 1/6 px^2
/// from linear interpolation of each sub-pixel sample.
inline double spread_extent(const std::vector<double>& row, std::size_t n) {
    double m0 = 0, m1 = 0, m2 = 0;
    for (std::size_t x = 0; x < row.size(); ++x) {
        const double xd = static_cast<double>(x);
        m0 += row[x];
        m1 += row[x] * xd;
        m2 += row[x] * xd * xd;
    }
    if (m0 <= 0.0 || n < 2) return 0.0;
    const double mu = m1 / m0;
    const double var = m2 / m0 - mu * mu - 1.0 / 6.0;
    const double nd = static_cast<double>(n);
    return var <= 0.0 ? 0.0 : (nd - 1.0) * std::sqrt(12.0 * var / (nd * nd - 1.0));
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle

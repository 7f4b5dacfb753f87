#include "focalspec/cone_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "focalspec/error.hpp"
#include "focalspec/image_io.hpp"

namespace focalspec {
namespace {

struct Grid {
    std::ptrdiff_t rows, cols, i0, j0;

    explicit Grid(std::size_t r, std::size_t c)
        : rows(static_cast<std::ptrdiff_t>(r)), cols(static_cast<std::ptrdiff_t>(c)),
          i0(static_cast<std::ptrdiff_t>(r / 2)), j0(static_cast<std::ptrdiff_t>(c / 2)) {}

    bool has_mirror(std::ptrdiff_t i, std::ptrdiff_t j) const {
        const auto mi = 2 * i0 - i;
        const auto mj = 2 * j0 - j;
        return mi >= 0 && mi < rows && mj >= 0 && mj < cols;
    }
};

double line_distance(double a, double b, double slope) {
    return std::abs(a - slope * b) / std::sqrt(1.0 + slope * slope);
}

SpectralMask dilate(const SpectralMask& in, std::size_t radius) {
    if (radius == 0) return in;
    const auto r = static_cast<std::ptrdiff_t>(radius);
    const auto rows = static_cast<std::ptrdiff_t>(in.rows);
    const auto cols = static_cast<std::ptrdiff_t>(in.cols);
    SpectralMask horiz(in.rows, in.cols), out(in.rows, in.cols);
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        for (std::ptrdiff_t j = 0; j < cols; ++j) {
            for (std::ptrdiff_t d = -r; d <= r; ++d) {
                const auto jj = j + d;
                if (jj >= 0 && jj < cols && in.at(i, jj)) {
                    horiz.set(i, j);
                    break;
                }
            }
        }
    }
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        for (std::ptrdiff_t j = 0; j < cols; ++j) {
            for (std::ptrdiff_t d = -r; d <= r; ++d) {
                const auto ii = i + d;
                if (ii >= 0 && ii < rows && horiz.at(ii, j)) {
                    out.set(i, j);
                    break;
                }
            }
        }
    }
    return out;
}

void drop_unmirrored(SpectralMask& mask) {
    const Grid g(mask.rows, mask.cols);
    for (std::ptrdiff_t i = 0; i < g.rows; ++i) {
        for (std::ptrdiff_t j = 0; j < g.cols; ++j) {
            if (!g.has_mirror(i, j)) mask.set(i, j, false);
        }
    }
}

}  // namespace

double apex_angle(double delta_alpha, std::size_t num_views, double baseline_unit) {
    if (num_views == 0) throw InputError("apex_angle: N_u must be >= 1");
    if (!(delta_alpha > 0.0)) throw InputError("apex_angle: delta_alpha must be positive");
    return 2.0 * std::atan(0.5 * delta_alpha * static_cast<double>(num_views - 1) * baseline_unit);
}

double continuous_apex_angle(std::size_t num_views, double baseline_unit) {
    return apex_angle(1.0, num_views, baseline_unit);
}

Slope spatial_slope(double delta_alpha, std::ptrdiff_t u_i, std::ptrdiff_t u_ref,
                    double baseline_unit) {
    if (!(delta_alpha > 0.0)) throw InputError("spatial_slope: delta_alpha must be positive");
    if (u_i == u_ref) return {0.0, true};
    return {1.0 / (delta_alpha * static_cast<double>(u_i - u_ref) * baseline_unit), false};
}

Slope continuous_spatial_slope(std::ptrdiff_t u_i, std::ptrdiff_t u_ref, double baseline_unit) {
    return spatial_slope(1.0, u_i, u_ref, baseline_unit);
}

ConeModel ConeModel::make(double delta_alpha, std::size_t num_views, std::size_t u_ref,
                          double baseline_unit) {
    if (num_views == 0) throw InputError("cone model needs at least one view");
    if (u_ref >= num_views) throw InputError("cone model u_ref out of range");
    if (!(baseline_unit > 0.0)) throw InputError("cone model baseline must be positive");
    ConeModel m;
    m.delta_alpha = delta_alpha;
    m.num_views = num_views;
    m.u_ref = u_ref;
    m.baseline_unit = baseline_unit;
    m.apex = apex_angle(delta_alpha, num_views, baseline_unit);
    for (std::size_t u = 0; u < num_views; ++u) {
        const double offset = (static_cast<double>(u) - static_cast<double>(u_ref)) * baseline_unit;
        m.view_offsets.push_back(offset);
        m.spatial_slopes.push_back(spatial_slope(delta_alpha, static_cast<std::ptrdiff_t>(u),
                                                 static_cast<std::ptrdiff_t>(u_ref), baseline_unit));
        // The spatial line x = c + f*offset has direction (1, offset) in (f, x);
        // its spectrum lies on the perpendicular omega_f + offset*omega_x = 0.
        const double norm = std::hypot(offset, 1.0);
        m.spectral_lines.emplace_back(-offset / norm, 1.0 / norm);
    }
    return m;
}

ConeModel ConeModel::from_provenance(const FssProvenance& p) {
    if (p.num_views == 0) throw InputError("spectrum provenance lacks the view count");
    return make(p.delta_alpha, p.num_views, p.u_ref, p.baseline_unit);
}

ConeModel ConeModel::with_inserted_views(std::size_t inserted) const {
    const std::size_t factor = inserted + 1;
    return make(delta_alpha, (num_views - 1) * factor + 1, u_ref * factor,
                baseline_unit / static_cast<double>(factor));
}

double ConeModel::max_offset() const {
    return *std::max_element(view_offsets.begin(), view_offsets.end());
}

double ConeModel::min_offset() const {
    return *std::min_element(view_offsets.begin(), view_offsets.end());
}

std::size_t SpectralMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

double spectral_bin_slope(double offset, double delta_alpha, std::size_t rows, std::size_t cols) {
    return -offset * delta_alpha * static_cast<double>(rows) / static_cast<double>(cols);
}

std::vector<SpectralLine> predict_spectral_lines(const ConeModel& model, std::size_t rows,
                                                 std::size_t cols) {
    const Grid g(rows, cols);
    std::vector<SpectralLine> lines;
    lines.reserve(model.view_offsets.size());
    for (double offset : model.view_offsets) {
        SpectralLine line{offset, spectral_bin_slope(offset, model.delta_alpha, rows, cols), {}};
        for (std::ptrdiff_t i = 0; i < g.rows; ++i) {
            for (std::ptrdiff_t j = 0; j < g.cols; ++j) {
                if (!g.has_mirror(i, j)) continue;
                const double a = static_cast<double>(i - g.i0);
                const double b = static_cast<double>(j - g.j0);
                if (line_distance(a, b, line.bin_slope) <= 0.5) {
                    line.bins.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                }
            }
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

SpectralMask line_mask(const ConeModel& model, std::size_t rows, std::size_t cols,
                       std::size_t radius) {
    SpectralMask mask(rows, cols);
    for (const auto& line : predict_spectral_lines(model, rows, cols)) {
        for (auto [i, j] : line.bins) mask.set(i, j);
    }
    mask = dilate(mask, radius);
    drop_unmirrored(mask);
    return mask;
}

SpectralMask support_mask(const ConeModel& model, std::size_t rows, std::size_t cols,
                          std::size_t radius) {
    const double s1 = spectral_bin_slope(model.min_offset(), model.delta_alpha, rows, cols);
    const double s2 = spectral_bin_slope(model.max_offset(), model.delta_alpha, rows, cols);
    const double lo = std::min(s1, s2), hi = std::max(s1, s2);
    const Grid g(rows, cols);
    SpectralMask mask(rows, cols);
    for (std::ptrdiff_t i = 0; i < g.rows; ++i) {
        for (std::ptrdiff_t j = 0; j < g.cols; ++j) {
            // unmirrored bins would seed the dilation on one side only
            if (!g.has_mirror(i, j)) continue;
            const double a = static_cast<double>(i - g.i0);
            const double b = static_cast<double>(j - g.j0);
            bool inside = false;
            if (b != 0.0) {
                const double s = a / b;
                inside = s >= lo && s <= hi;
            }
            if (!inside) {
                inside = std::min(line_distance(a, b, lo), line_distance(a, b, hi)) <= 0.5;
            }
            if (inside) mask.set(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
    }
    mask = dilate(mask, radius);
    drop_unmirrored(mask);
    return mask;
}

std::optional<double> energy_concentration(const Fss& fss, const SpectralMask& mask,
                                           std::size_t dc_patch) {
    if (mask.rows != fss.rows() || mask.cols != fss.cols()) {
        throw InputError("mask dimensions do not match the spectrum");
    }
    const std::size_t half = dc_patch / 2;
    const std::size_t i0 = fss.dc_row(), j0 = fss.dc_col();
    auto in_dc = [&](std::size_t i, std::size_t j) {
        if (dc_patch == 0) return false;
        const std::size_t di = i > i0 ? i - i0 : i0 - i;
        const std::size_t dj = j > j0 ? j - j0 : j0 - j;
        return di <= half && dj <= half;
    };
    double inside = 0.0, total = 0.0;
    for (std::size_t c = 0; c < fss.channels(); ++c) {
        for (std::size_t i = 0; i < fss.rows(); ++i) {
            for (std::size_t j = 0; j < fss.cols(); ++j) {
                if (in_dc(i, j)) continue;
                const double e = std::norm(fss.at(c, i, j));
                total += e;
                if (mask.at(i, j)) inside += e;
            }
        }
    }
    if (!(total > 0.0)) return std::nullopt;
    return inside / total;
}

std::vector<double> detect_spectral_lines(const Fss& fss, double delta_alpha, double offset_unit,
                                          const LineDetectionOptions& opt) {
    if (!(delta_alpha > 0.0) || !(offset_unit > 0.0)) {
        throw InputError("line detection needs positive delta_alpha and offset unit");
    }
    if (!(opt.bin_width > 0.0) || !(opt.max_offset > 0.0)) {
        throw InputError("line detection needs a positive histogram range");
    }
    const auto bins = static_cast<std::size_t>(std::llround(2.0 * opt.max_offset / opt.bin_width)) + 1;
    std::vector<double> hist(bins, 0.0);
    const Grid g(fss.rows(), fss.cols());
    const double min_col = opt.min_col_fraction * static_cast<double>(fss.cols()) / 2.0;
    const double scale = static_cast<double>(fss.cols()) /
                         (static_cast<double>(fss.rows()) * delta_alpha * offset_unit);

    for (std::ptrdiff_t i = 0; i < g.rows; ++i) {
        for (std::ptrdiff_t j = 0; j < g.cols; ++j) {
            const double b = static_cast<double>(j - g.j0);
            if (b == 0.0 || std::abs(b) < min_col) continue;
            const double a = static_cast<double>(i - g.i0);
            // Offset whose line passes through this bin.
            const double offset = -a * scale / b;
            const double pos = (offset + opt.max_offset) / opt.bin_width;
            const auto idx = std::llround(pos);
            if (idx < 0 || idx >= static_cast<long long>(bins)) continue;
            double e = 0.0;
            for (std::size_t c = 0; c < fss.channels(); ++c) {
                e += std::norm(fss.at(c, static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
            }
            hist[static_cast<std::size_t>(idx)] += e;
        }
    }

    const double peak = *std::max_element(hist.begin(), hist.end());
    if (!(peak > 0.0)) return {};
    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k < bins; ++k) {
        const double left = k > 0 ? hist[k - 1] : 0.0;
        const double right = k + 1 < bins ? hist[k + 1] : 0.0;
        if (hist[k] > left && hist[k] >= right && hist[k] >= opt.min_relative_height * peak) {
            candidates.push_back(k);
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t x, std::size_t y) { return hist[x] > hist[y]; });
    const double min_sep_bins = opt.min_separation / opt.bin_width;
    std::vector<std::size_t> kept;
    for (std::size_t k : candidates) {
        const bool clear = std::none_of(kept.begin(), kept.end(), [&](std::size_t q) {
            return std::abs(static_cast<double>(k) - static_cast<double>(q)) < min_sep_bins;
        });
        if (clear) kept.push_back(k);
    }
    std::vector<double> offsets;
    for (std::size_t k : kept) {
        offsets.push_back(static_cast<double>(k) * opt.bin_width - opt.max_offset);
    }
    std::sort(offsets.begin(), offsets.end());
    return offsets;
}

void write_mask_png(const std::filesystem::path& path, const SpectralMask& mask) {
    Image image(mask.rows, mask.cols, 1);
    for (std::size_t i = 0; i < mask.rows; ++i) {
        for (std::size_t j = 0; j < mask.cols; ++j) image.at(i, j, 0) = mask.at(i, j) ? 1.0f : 0.0f;
    }
    write_png(path, image, 8);
}

std::string encode_mask_rle(const SpectralMask& mask) {
    std::ostringstream out;
    out << "RLE1 " << mask.rows << ' ' << mask.cols << '\n';
    std::uint8_t current = 0;
    std::size_t run = 0;
    bool first = true;
    auto flush = [&] {
        if (!first) out << ' ';
        out << run;
        first = false;
    };
    for (std::uint8_t bit : mask.bits) {
        if (bit == current) {
            ++run;
        } else {
            flush();
            current = bit;
            run = 1;
        }
    }
    flush();
    out << '\n';
    return out.str();
}

SpectralMask decode_mask_rle(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    std::size_t rows = 0, cols = 0;
    in >> magic >> rows >> cols;
    if (!in || magic != "RLE1") throw InputError("malformed mask RLE header");
    SpectralMask mask(rows, cols);
    std::size_t pos = 0, run = 0;
    std::uint8_t value = 0;
    while (in >> run) {
        if (pos + run > mask.bits.size()) throw InputError("mask RLE overruns its dimensions");
        std::fill_n(mask.bits.begin() + static_cast<std::ptrdiff_t>(pos), run, value);
        pos += run;
        value ^= 1;
    }
    if (pos != mask.bits.size()) throw InputError("mask RLE does not cover its dimensions");
    return mask;
}

}  // namespace focalspec

#include "focalspec/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "focalspec/error.hpp"
#include "focalspec/parallel.hpp"

namespace focalspec {
namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

template <class T>
std::optional<double> mean_of(const std::vector<LayerMetrics>& layers, T pick) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& l : layers) {
        if (const std::optional<double> v = pick(l)) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

void summarize(LayerReport& r) {
    r.mean_psnr = mean_of(r.layers, [](const LayerMetrics& l) {
        return l.psnr.infinite ? std::nullopt : std::optional<double>(l.psnr.db);
    });
    r.mean_ssim = mean_of(r.layers, [](const LayerMetrics& l) { return std::optional<double>(l.ssim); })
                      .value_or(0.0);
    r.mean_rel_psnr = mean_of(r.layers, [](const LayerMetrics& l) { return l.rel_psnr; });
    r.mean_rel_ssim = mean_of(r.layers, [](const LayerMetrics& l) { return l.rel_ssim; });
}

nlohmann::json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string Psnr::str() const { return infinite ? "inf" : fmt(db); }

Psnr psnr(const Image& a, const Image& b, double peak) {
    if (!a.same_shape(b)) throw InputError("psnr: images differ in shape");
    if (a.size() == 0) throw InputError("psnr: empty images");
    double se = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
        se += d * d;
    }
    if (se == 0.0) return Psnr::inf();
    const double mse = se / static_cast<double>(da.size());
    return {10.0 * std::log10(peak * peak / mse), false};
}

double ssim(const Image& a, const Image& b, const SsimParams& p) {
    if (!a.same_shape(b)) throw InputError("ssim: images differ in shape");
    const std::size_t win = p.window;
    if (win == 0 || a.height() < win || a.width() < win) {
        throw InputError("ssim: image smaller than the " + std::to_string(win) + "x" +
                         std::to_string(win) + " window");
    }
    const double c1 = (p.k1 * p.peak) * (p.k1 * p.peak);
    const double c2 = (p.k2 * p.peak) * (p.k2 * p.peak);
    const std::size_t h = a.height(), w = a.width(), nc = a.channels();
    const double n = static_cast<double>(win * win);

    // Summed-area tables of x, y, x^2, y^2, xy make every window O(1).
    const std::size_t sw = w + 1;
    std::vector<double> sx((h + 1) * sw), sy(sx.size()), sxx(sx.size()), syy(sx.size()), sxy(sx.size());
    double total = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                const double x = a.at(i, j, c), y = b.at(i, j, c);
                const std::size_t o = (i + 1) * sw + j + 1;
                const std::size_t up = i * sw + j + 1, left = (i + 1) * sw + j, diag = i * sw + j;
                sx[o] = x + sx[up] + sx[left] - sx[diag];
                sy[o] = y + sy[up] + sy[left] - sy[diag];
                sxx[o] = x * x + sxx[up] + sxx[left] - sxx[diag];
                syy[o] = y * y + syy[up] + syy[left] - syy[diag];
                sxy[o] = x * y + sxy[up] + sxy[left] - sxy[diag];
            }
        }
        auto box = [&](const std::vector<double>& s, std::size_t i, std::size_t j) {
            return s[(i + win) * sw + j + win] - s[i * sw + j + win] - s[(i + win) * sw + j] + s[i * sw + j];
        };
        double sum = 0.0;
        for (std::size_t i = 0; i + win <= h; ++i) {
            for (std::size_t j = 0; j + win <= w; ++j) {
                const double mx = box(sx, i, j) / n, my = box(sy, i, j) / n;
                const double vx = std::max(0.0, box(sxx, i, j) / n - mx * mx);
                const double vy = std::max(0.0, box(syy, i, j) / n - my * my);
                const double cxy = box(sxy, i, j) / n - mx * my;
                sum += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        }
        total += sum / static_cast<double>((h - win + 1) * (w - win + 1));
    }
    return total / static_cast<double>(nc);
}

double spectral_energy_loss(const Fss& gt, const Fss& out) {
    if (!gt.same_shape(out)) throw InputError("spectral_energy_loss: spectra differ in shape");
    double eg = 0.0, eo = 0.0;
    for (const auto& v : gt.data()) eg += std::norm(v);
    for (const auto& v : out.data()) eo += std::norm(v);
    if (eg == 0.0) throw InputError("spectral_energy_loss: ground truth has zero energy");
    return std::abs(eg - eo) / eg;
}

LayerReport evaluate_stack(const FocalStack& out, const FocalStack& gt, const SsimParams& params,
                           unsigned threads) {
    if (out.num_layers() != gt.num_layers() || out.height() != gt.height() || out.width() != gt.width() ||
        out.channels() != gt.channels()) {
        throw InputError("focal stacks differ in shape");
    }
    if (std::abs(out.d_min() - gt.d_min()) > 1e-9 || std::abs(out.delta_alpha() - gt.delta_alpha()) > 1e-9) {
        throw InputError("focal stacks have different focal axes");
    }
    LayerReport report;
    report.layers.resize(out.num_layers());
    parallel_for(out.num_layers(), threads, [&](std::size_t k) {
        const Image a = out.layer(k), b = gt.layer(k);
        auto& l = report.layers[k];
        l.f = out.focal_value(k);
        l.psnr = psnr(a, b);
        l.ssim = ssim(a, b, params);
    });
    summarize(report);
    return report;
}

LayerReport relative_metrics(const LayerReport& output, const LayerReport& input) {
    if (output.layers.size() != input.layers.size()) {
        throw InputError("reports have different layer counts (" + std::to_string(output.layers.size()) +
                         " vs " + std::to_string(input.layers.size()) + ")");
    }
    LayerReport r = output;
    for (std::size_t k = 0; k < r.layers.size(); ++k) {
        auto& l = r.layers[k];
        const auto& o = output.layers[k];
        const auto& i = input.layers[k];
        if (std::abs(o.f - i.f) > 1e-9) throw InputError("reports have different focal axes");
        if (o.psnr.infinite && i.psnr.infinite) {
            l.rel_psnr = 0.0;
        } else if (o.psnr.infinite || i.psnr.infinite) {
            l.rel_psnr.reset();
        } else {
            l.rel_psnr = o.psnr.db - i.psnr.db;
        }
        l.rel_ssim = o.ssim - i.ssim;
    }
    summarize(r);
    return r;
}

std::string report_csv(const LayerReport& report) {
    std::ostringstream out;
    out << "layer,f,psnr_db,ssim,rel_psnr_db,rel_ssim\n";
    for (std::size_t k = 0; k < report.layers.size(); ++k) {
        const auto& l = report.layers[k];
        out << k << ',' << fmt(l.f) << ',' << l.psnr.str() << ',' << fmt(l.ssim) << ','
            << (l.rel_psnr ? fmt(*l.rel_psnr) : "") << ',' << (l.rel_ssim ? fmt(*l.rel_ssim) : "") << '\n';
    }
    return out.str();
}

std::string report_json(const LayerReport& report) {
    nlohmann::json j;
    j["layers"] = report.layers.size();
    j["infinite_psnr_layers"] = std::count_if(report.layers.begin(), report.layers.end(),
                                              [](const LayerMetrics& l) { return l.psnr.infinite; });
    j["mean_psnr_db"] = opt_json(report.mean_psnr);
    j["mean_ssim"] = report.mean_ssim;
    j["mean_rel_psnr_db"] = opt_json(report.mean_rel_psnr);
    j["mean_rel_ssim"] = opt_json(report.mean_rel_ssim);
    j["spectral_energy_loss"] = opt_json(report.spectral_energy_loss);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& l : report.layers) {
        rows.push_back({{"f", l.f},
                        {"psnr_db", l.psnr.infinite ? nlohmann::json("inf") : nlohmann::json(l.psnr.db)},
                        {"ssim", l.ssim},
                        {"rel_psnr_db", opt_json(l.rel_psnr)},
                        {"rel_ssim", opt_json(l.rel_ssim)}});
    }
    j["per_layer"] = std::move(rows);
    return j.dump(2);
}

}  // namespace focalspec

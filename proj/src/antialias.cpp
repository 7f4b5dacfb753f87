#include "focalspec/antialias.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "focalspec/error.hpp"
#include "focalspec/parallel.hpp"

namespace focalspec {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

FssProvenance provenance_of(const Epi& epi) {
    return {0.0, 0.0, epi.num_views(), epi.u_ref(), epi.baseline_unit()};
}

void check_operator(const CompletionOperator& op) {
    std::visit(Overloaded{
                   [](const AnalyticReplicate&) {},
                   [](const EpiLowpass& lp) {
                       if (!(lp.cutoff > 0.0 && lp.cutoff <= 1.0)) {
                           throw InputError("low-pass cutoff must lie in (0, 1]");
                       }
                   },
                   [](const NeuralCompletion& nc) {
                       if (!nc.network) throw InputError("neural operator needs weights");
                   },
               },
               op);
}

void clip_unit(FocalStack& stack) {
    for (auto& v : stack.data()) v = std::clamp(v, 0.0f, 1.0f);
}

/// Vertical EPI of column x taken from layer k of every per-row stack: the
/// views are the v rows, the spatial axis is y.
Epi vertical_epi(const std::vector<FocalStack>& horizontal, const LightField4D& lf, std::size_t k,
                 std::size_t x) {
    Epi epi(lf.num_v(), lf.height(), lf.channels(), lf.v_ref(), lf.baseline_unit());
    for (std::size_t v = 0; v < lf.num_v(); ++v) {
        for (std::size_t y = 0; y < lf.height(); ++y) {
            for (std::size_t c = 0; c < lf.channels(); ++c) epi.at(v, y, c) = horizontal[v].at(k, y, x, c);
        }
    }
    return epi;
}

}  // namespace

std::string operator_name(const CompletionOperator& op) {
    return std::visit(Overloaded{
                          [](const AnalyticReplicate&) { return std::string("analytic"); },
                          [](const EpiLowpass&) { return std::string("lowpass"); },
                          [](const NeuralCompletion&) { return std::string("neural"); },
                      },
                      op);
}

std::vector<ViewPlacement> replicated_placements(const Epi& epi, std::size_t inserted) {
    std::vector<ViewPlacement> out;
    const std::size_t n = epi.num_views();
    const auto ref = static_cast<std::ptrdiff_t>(epi.u_ref());
    const double step = epi.baseline_unit() / static_cast<double>(inserted + 1);
    for (std::size_t u = 0; u < n; ++u) {
        out.push_back({u, epi.view_offset(u)});
        if (u + 1 == n) break;
        for (std::size_t m = 1; m <= inserted; ++m) {
            std::size_t near = u;
            if (2 * m > inserted + 1) {
                near = u + 1;
            } else if (2 * m == inserted + 1) {
                const auto du = std::abs(static_cast<std::ptrdiff_t>(u) - ref);
                const auto dn = std::abs(static_cast<std::ptrdiff_t>(u + 1) - ref);
                near = dn < du ? u + 1 : u;
            }
            out.push_back({near, epi.view_offset(u) + static_cast<double>(m) * step});
        }
    }
    return out;
}

FocalStack analytic_complete(const Epi& epi, const RefocusConfig& cfg, std::size_t inserted) {
    const auto placements = replicated_placements(epi, inserted);
    return integrate_placements(epi, placements, cfg);
}

FocalStack epi_lowpass_refocus(const Epi& epi, const RefocusConfig& cfg, double cutoff) {
    if (!(cutoff > 0.0 && cutoff <= 1.0)) throw InputError("low-pass cutoff must lie in (0, 1]");
    const std::size_t w = epi.width();
    const std::size_t nc = epi.channels();
    const double keep = cutoff * static_cast<double>(w) / 2.0;
    Epi filtered = epi;
    std::vector<Complex> line(w);
    for (std::size_t u = 0; u < epi.num_views(); ++u) {
        for (std::size_t c = 0; c < nc; ++c) {
            for (std::size_t x = 0; x < w; ++x) line[x] = epi.at(u, x, c);
            dft1(line, false);
            for (std::size_t k = 0; k < w; ++k) {
                // natural order: bin k stands for frequency k or k - w
                const double freq = k <= w / 2 ? static_cast<double>(k) : static_cast<double>(w - k);
                if (freq > keep + 1e-9) line[k] = 0.0;
            }
            dft1(line, true);
            for (std::size_t x = 0; x < w; ++x) filtered.at(u, x, c) = static_cast<float>(line[x].real());
        }
    }
    return build_focal_stack(filtered, cfg);
}

Fss completed_spectrum(const Epi& epi, const RefocusConfig& cfg, const CompletionOperator& op) {
    check_operator(op);
    return std::visit(
        Overloaded{
            [&](const AnalyticReplicate& a) {
                return fss_forward(analytic_complete(epi, cfg, a.inserted), provenance_of(epi));
            },
            [&](const EpiLowpass& lp) {
                return fss_forward(epi_lowpass_refocus(epi, cfg, lp.cutoff), provenance_of(epi));
            },
            [&](const NeuralCompletion& nc) {
                const Fss input = fss_forward(build_focal_stack(epi, cfg), provenance_of(epi));
                return dc_patch_replace(neural_complete(input, *nc.network), input, nc.dc_patch);
            },
        },
        op);
}

SliceResult antialias_slice(const Epi& epi, const RefocusConfig& cfg, const CompletionOperator& op) {
    const Fss spectrum = completed_spectrum(epi, cfg, op);
    InverseResult inv = fss_inverse(spectrum);
    clip_unit(inv.slice);
    SliceResult result{std::move(inv.slice), {}};
    result.diagnostics.symmetry_residual = conj_symmetry_residual(spectrum);
    result.diagnostics.imaginary_rms = inv.imaginary_rms;
    result.diagnostics.signal_rms = inv.signal_rms;
    result.diagnostics.symmetry_warning = inv.symmetry_warning;
    return result;
}

LightFieldResult antialias_lightfield(const LightField3D& lf, const RefocusConfig& cfg,
                                      const CompletionOperator& op, std::optional<RowRange> rows,
                                      unsigned threads) {
    check_operator(op);
    const RowRange range = rows.value_or(RowRange{0, lf.height()});
    if (range.begin >= range.end || range.end > lf.height()) {
        throw InputError("row range " + std::to_string(range.begin) + ".." + std::to_string(range.end) +
                         " is empty or exceeds the image height " + std::to_string(lf.height()));
    }
    const std::size_t n = range.end - range.begin;
    LightFieldResult result{FocalStack(cfg.layer_count(), n, lf.width(), lf.channels(), cfg.d_min,
                                       cfg.delta_alpha),
                            std::vector<SliceDiagnostics>(n), range.begin};
    parallel_for(n, threads, [&](std::size_t i) {
        const std::size_t y = range.begin + i;
        try {
            SliceResult slice = antialias_slice(extract_epi(lf, y), cfg, op);
            result.stack.set_row(i, slice.stack);
            result.rows[i] = slice.diagnostics;
        } catch (const InputError&) {
            throw;
        } catch (const std::exception& e) {
            throw RowError(y, e.what());
        }
    });
    return result;
}

FocalStack antialias_4d(const LightField4D& lf, const RefocusConfig& cfg, const CompletionOperator& op,
                        unsigned threads) {
    check_operator(op);
    const std::size_t layers = cfg.layer_count();
    std::vector<FocalStack> horizontal;
    horizontal.reserve(lf.num_v());
    for (std::size_t v = 0; v < lf.num_v(); ++v) {
        horizontal.push_back(antialias_lightfield(lf.horizontal(v), cfg, op, std::nullopt, threads).stack);
    }
    if (lf.num_v() == 1) return std::move(horizontal.front());

    // Layer k of the result comes from the vertical pass over layer k of the
    // horizontal results; the other layers of that pass are discarded.
    FocalStack out(layers, lf.height(), lf.width(), lf.channels(), cfg.d_min, cfg.delta_alpha);
    parallel_for(layers * lf.width(), threads, [&](std::size_t job) {
        const std::size_t k = job / lf.width();
        const std::size_t x = job % lf.width();
        const SliceResult slice = antialias_slice(vertical_epi(horizontal, lf, k, x), cfg, op);
        for (std::size_t y = 0; y < lf.height(); ++y) {
            for (std::size_t c = 0; c < lf.channels(); ++c) out.at(k, y, x, c) = slice.stack.at(k, 0, y, c);
            out.weight(k, y, x) = slice.stack.weight(k, 0, y);
        }
    });
    return out;
}

}  // namespace focalspec

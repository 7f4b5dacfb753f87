#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "focalspec/lightfield.hpp"
#include "focalspec/refocus.hpp"
#include "focalspec/spectrum.hpp"
#include "focalspec/unet.hpp"

namespace focalspec {

/// Inserts M virtual views per gap by replicating the nearest real view.
struct AnalyticReplicate {
    std::size_t inserted = 1;
};

/// Brick-wall low-pass of every view row before refocusing.
struct EpiLowpass {
    double cutoff = 0.5;
};

struct NeuralCompletion {
    std::shared_ptr<const CompletionNetwork> network;
    std::size_t dc_patch = 5;
};

using CompletionOperator = std::variant<AnalyticReplicate, EpiLowpass, NeuralCompletion>;

std::string operator_name(const CompletionOperator& op);

/// Virtual view placements for M insertions per gap, nearest real view
/// replicated (ties go to the view closer to u_ref).
std::vector<ViewPlacement> replicated_placements(const Epi& epi, std::size_t inserted);

/// Focal stack of the EPI with M replicated views inserted into each gap.
/// Exact for zero-disparity content; content at disparity d is displaced by
/// d * (offset_virtual - offset_source).
FocalStack analytic_complete(const Epi& epi, const RefocusConfig& cfg, std::size_t inserted);

/// Each view row is low-passed along x, keeping |k| <= cutoff * W / 2, then
/// refocused.
FocalStack epi_lowpass_refocus(const Epi& epi, const RefocusConfig& cfg, double cutoff);

struct SliceDiagnostics {
    double symmetry_residual = 0.0;
    double imaginary_rms = 0.0;
    double signal_rms = 0.0;
    bool symmetry_warning = false;
};

struct SliceResult {
    FocalStack stack;
    SliceDiagnostics diagnostics;
};

/// Per-row pipeline: refocus, forward transform, completion, inverse
/// transform, clip to [0, 1]. The neural path restores the DC block from the
/// input spectrum before inverting.
SliceResult antialias_slice(const Epi& epi, const RefocusConfig& cfg, const CompletionOperator& op);

/// Completed spectrum for one EPI, before the inverse transform.
Fss completed_spectrum(const Epi& epi, const RefocusConfig& cfg, const CompletionOperator& op);

struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct LightFieldResult {
    FocalStack stack;
    std::vector<SliceDiagnostics> rows;
    std::size_t first_row = 0;
};

/// Applies antialias_slice to every row in `rows` (all rows when empty).
/// Rows are independent; the output does not depend on `threads`.
LightFieldResult antialias_lightfield(const LightField3D& lf, const RefocusConfig& cfg,
                                      const CompletionOperator& op,
                                      std::optional<RowRange> rows = std::nullopt,
                                      unsigned threads = 0);

/// Horizontal pass on every view row, then a vertical pass on every column of
/// the intermediate per-layer light field. The second pass works on already
/// reconstructed data, so errors of the first pass accumulate.
FocalStack antialias_4d(const LightField4D& lf, const RefocusConfig& cfg,
                        const CompletionOperator& op, unsigned threads = 0);

}  // namespace focalspec

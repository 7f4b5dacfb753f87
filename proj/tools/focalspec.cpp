// focalspec command line: synthetic light fields, focal stacks, their
// spectra, and anti-aliased reconstructions.
//
// Exit status: 0 ok, 2 bad usage or bad input, 1 anything else.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "focalspec/antialias.hpp"
#include "focalspec/cone_geometry.hpp"
#include "focalspec/error.hpp"
#include "focalspec/formats.hpp"
#include "focalspec/image_io.hpp"
#include "focalspec/lightfield.hpp"
#include "focalspec/metrics.hpp"
#include "focalspec/parallel.hpp"
#include "focalspec/refocus.hpp"
#include "focalspec/spectrum.hpp"
#include "focalspec/unet.hpp"

namespace fs = std::filesystem;
using namespace focalspec;
using nlohmann::json;

namespace {

struct Common {
    bool json_out = false;
    unsigned threads = 0;
};

// focal axis flags; unset values fall back to the light field's manifest
struct AxisFlags {
    std::optional<double> d_min, d_max;
    double delta_alpha = 0.01;
    std::optional<std::size_t> layers;
    std::string boundary = "renormalize";

    void add(CLI::App* cmd) {
        cmd->add_option("--d-min", d_min, "first focal disparity");
        cmd->add_option("--d-max", d_max, "last focal disparity");
        cmd->add_option("--delta-alpha", delta_alpha, "focal step")->capture_default_str();
        cmd->add_option("--layers", layers, "number of layers from d-min (overrides d-max)");
        cmd->add_option("--boundary", boundary, "renormalize|zero")
            ->check(CLI::IsMember({"renormalize", "zero"}))
            ->capture_default_str();
    }

    RefocusConfig config(DisparityRange range) const {
        RefocusConfig cfg;
        if (range.max > range.min) {
            cfg.d_min = range.min;
            cfg.d_max = range.max;
        }
        if (d_min) cfg.d_min = *d_min;
        if (d_max) cfg.d_max = *d_max;
        cfg.delta_alpha = delta_alpha;
        cfg.boundary = boundary == "zero" ? BoundaryPolicy::zero : BoundaryPolicy::renormalize;
        if (layers) {
            if (*layers == 0) throw InputError("--layers must be >= 1");
            return RefocusConfig::with_layers(cfg.d_min, cfg.delta_alpha, *layers, cfg.boundary);
        }
        cfg.validate();
        return cfg;
    }
};

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + p.string());
    out << text;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
}

RowRange parse_rows(const std::string& text, std::size_t height) {
    const auto dots = text.find("..");
    RowRange r;
    try {
        if (dots == std::string::npos) {
            r.begin = std::stoul(text);
            r.end = r.begin + 1;
        } else {
            r.begin = std::stoul(text.substr(0, dots));
            r.end = std::stoul(text.substr(dots + 2));
        }
    } catch (const std::exception&) {
        throw InputError("bad row range '" + text + "' (expected a..b)");
    }
    if (r.begin >= r.end || r.end > height) {
        throw InputError("row range " + text + " outside [0, " + std::to_string(height) + ")");
    }
    return r;
}

FssProvenance provenance_of(const LightField3D& lf, const RefocusConfig& cfg) {
    return {cfg.delta_alpha, cfg.d_min, lf.num_views(), lf.u_ref(), lf.baseline_unit()};
}

void emit(const Common& c, const json& summary, const std::string& text) {
    if (c.json_out) {
        std::cout << summary.dump(2) << "\n";
    } else {
        std::cout << text;
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string opt_str(const std::optional<double>& v) { return v ? fmt("%.4f", *v) : "n/a"; }

void save_layers(const fs::path& dir, const FocalStack& stack) {
    for (std::size_t k = 0; k < stack.num_layers(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "layer_%03zu.png", k);
        write_png(dir / name, stack.layer(k));
    }
}

FocalStack refocus_any(const AnyLightField& any, const AxisFlags& axis, unsigned threads,
                       FssProvenance& prov) {
    if (const auto* lf = std::get_if<LightField3D>(&any)) {
        const auto cfg = axis.config(lf->disparity_range());
        prov = provenance_of(*lf, cfg);
        return build_focal_stack(*lf, cfg, threads);
    }
    const auto& lf = std::get<LightField4D>(any);
    const auto cfg = axis.config(lf.disparity_range());
    prov = {cfg.delta_alpha, cfg.d_min, lf.num_u(), lf.u_ref(), lf.baseline_unit()};
    FocalStack stack(cfg.layer_count(), lf.height(), lf.width(), lf.channels(), cfg.d_min,
                     cfg.delta_alpha);
    parallel_for(stack.num_layers(), threads, [&](std::size_t k) {
        const Image img = refocus_4d_two_stage(lf, stack.focal_value(k), cfg.boundary);
        std::copy(img.data().begin(), img.data().end(),
                  stack.data().begin() + static_cast<std::ptrdiff_t>(k * img.size()));
    });
    return stack;
}

// provenance from the sidecar, overridden by flags
struct ProvFlags {
    std::optional<std::size_t> num_views, u_ref;
    std::optional<double> baseline;

    void add(CLI::App* cmd) {
        cmd->add_option("--num-views", num_views, "views that built the stack");
        cmd->add_option("--u-ref", u_ref, "reference view index");
        cmd->add_option("--baseline", baseline, "baseline unit");
    }

    FssProvenance resolve(const fs::path& stack_path, const FocalStack& stack) const {
        FssProvenance p = read_provenance(stack_path).value_or(FssProvenance{});
        p.delta_alpha = stack.delta_alpha();
        p.d_min = stack.d_min();
        if (num_views) p.num_views = *num_views;
        if (u_ref) p.u_ref = *u_ref;
        if (baseline) p.baseline_unit = *baseline;
        return p;
    }
};

int cmd_gen(const Common& c, const fs::path& spec_path, const fs::path& out, std::size_t downsample) {
    const auto spec = parse_scene_spec(read_text(spec_path));
    auto lf = render_synthetic(spec);
    for (auto i : clipped_primitives(spec)) std::cerr << "warning: primitive " << i << " leaves the frame and is clipped\n";
    if (downsample > 1) lf = downsample_views(lf, downsample);
    make_dir(out);
    save_lightfield(out, lf);
    json s = {{"views", lf.num_views()}, {"height", lf.height()}, {"width", lf.width()},
              {"u_ref", lf.u_ref()}, {"baseline_unit", lf.baseline_unit()}, {"output", out.string()}};
    emit(c, s, "wrote " + std::to_string(lf.num_views()) + " views to " + out.string() + "\n");
    return 0;
}

int cmd_refocus(const Common& c, const fs::path& lf_dir, const fs::path& out, const AxisFlags& axis,
                bool pngs) {
    const auto any = load_lightfield(lf_dir);
    FssProvenance prov;
    const auto stack = refocus_any(any, axis, c.threads, prov);
    make_dir(out);
    write_fstk(out / "stack.fstk", stack);
    write_provenance(out / "stack.fstk", prov);
    if (pngs) save_layers(out, stack);
    json s = {{"layers", stack.num_layers()}, {"d_min", stack.d_min()},
              {"delta_alpha", stack.delta_alpha()}, {"output", (out / "stack.fstk").string()}};
    emit(c, s, std::to_string(stack.num_layers()) + " layers -> " + (out / "stack.fstk").string() + "\n");
    return 0;
}

int cmd_fss(const Common& c, const fs::path& in, const fs::path& out, const std::string& rows_text,
            const ProvFlags& pf, const std::optional<fs::path>& png_dir) {
    const auto stack = read_fstk(in);
    const auto prov = pf.resolve(in, stack);
    const RowRange r = rows_text.empty() ? RowRange{0, stack.height()} : parse_rows(rows_text, stack.height());
    std::vector<Fss> spectra(r.end - r.begin);
    parallel_for(spectra.size(), c.threads,
                 [&](std::size_t i) { spectra[i] = fss_forward(stack.row(r.begin + i), prov); });
    write_fssp(out, spectra);
    write_provenance(out, prov);
    double worst = 0.0;
    for (const auto& f : spectra) worst = std::max(worst, conj_symmetry_residual(f));
    if (png_dir) {
        make_dir(*png_dir);
        for (std::size_t i = 0; i < spectra.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "fss_row_%04zu.png", r.begin + i);
            write_png(*png_dir / name, log_magnitude_image(spectra[i]));
        }
    }
    json s = {{"rows", {r.begin, r.end}}, {"spectrum_rows", stack.num_layers()},
              {"spectrum_cols", stack.width()}, {"max_symmetry_residual", worst},
              {"output", out.string()}};
    emit(c, s, std::to_string(spectra.size()) + " spectra -> " + out.string() +
                   ", max symmetry residual " + fmt("%.3g", worst) + "\n");
    return 0;
}

int cmd_analyze(const Common& c, const fs::path& in, const fs::path& out, std::size_t row,
                const ProvFlags& pf, std::size_t radius) {
    const auto stack = read_fstk(in);
    if (row >= stack.height()) {
        throw InputError("row " + std::to_string(row) + " outside [0, " + std::to_string(stack.height()) + ")");
    }
    const auto prov = pf.resolve(in, stack);
    if (prov.num_views == 0) throw InputError("view count unknown: no sidecar and no --num-views");
    if (prov.u_ref >= prov.num_views) throw InputError("u_ref out of range");
    const auto fss = fss_forward(stack.row(row), prov);
    const auto model = ConeModel::from_provenance(prov);
    const auto lm = line_mask(model, fss.rows(), fss.cols(), radius);
    const auto sm = support_mask(model, fss.rows(), fss.cols(), radius);
    const double residual = conj_symmetry_residual(fss);
    const auto line_conc = energy_concentration(fss, lm);
    const auto support_conc = energy_concentration(fss, sm);
    const auto lines = detect_spectral_lines(fss, prov.delta_alpha, prov.baseline_unit);

    make_dir(out);
    write_png(out / "fss.png", log_magnitude_image(fss));
    write_mask_png(out / "line_mask.png", lm);
    write_mask_png(out / "support_mask.png", sm);
    write_text(out / "line_mask.rle", encode_mask_rle(lm));
    write_text(out / "support_mask.rle", encode_mask_rle(sm));

    json s = {{"row", row},
              {"shape", {fss.rows(), fss.cols(), fss.channels()}},
              {"num_views", prov.num_views},
              {"apex_angle", model.apex},
              {"symmetry_residual", residual},
              {"line_concentration", opt_json(line_conc)},
              {"support_concentration", opt_json(support_conc)},
              {"predicted_lines", prov.num_views},
              {"detected_lines", lines.size()},
              {"detected_offsets", lines}};
    write_text(out / "report.json", s.dump(2) + "\n");
    std::ostringstream t;
    t << "row " << row << ": " << fss.rows() << "x" << fss.cols() << " spectrum\n"
      << "  symmetry residual   " << fmt("%.3g", residual) << "\n"
      << "  line concentration  " << opt_str(line_conc) << "\n"
      << "  support conc.       " << opt_str(support_conc) << "\n"
      << "  lines               " << lines.size() << " detected, " << prov.num_views << " predicted\n";
    emit(c, s, t.str());
    return 0;
}

CompletionOperator make_operator(const std::string& name, std::size_t m, double cutoff,
                                 const std::optional<fs::path>& weights) {
    if (name == "analytic") return AnalyticReplicate{m};
    if (name == "lowpass") {
        if (!(cutoff > 0.0 && cutoff <= 1.0)) throw InputError("--cutoff must lie in (0, 1]");
        return EpiLowpass{cutoff};
    }
    if (!weights) throw InputError("--op neural needs --weights");
    return NeuralCompletion{std::make_shared<const CompletionNetwork>(read_weights(*weights)), 5};
}

// row subsets can be shorter than the 8x8 window; shrink it and say so
SsimParams ssim_params(const FocalStack& s) {
    SsimParams p;
    p.window = std::max<std::size_t>(1, std::min({p.window, s.height(), s.width()}));
    return p;
}

FocalStack rows_of(const FocalStack& s, RowRange r) {
    FocalStack out(s.num_layers(), r.end - r.begin, s.width(), s.channels(), s.d_min(), s.delta_alpha());
    for (std::size_t y = r.begin; y < r.end; ++y) out.set_row(y - r.begin, s.row(y));
    return out;
}

int cmd_antialias(const Common& c, const fs::path& lf_dir, const fs::path& out, const AxisFlags& axis,
                  const std::string& op_name, std::size_t m, double cutoff,
                  const std::optional<fs::path>& weights, const std::string& rows_text,
                  const std::optional<fs::path>& gt_dir, bool pngs) {
    const auto op = make_operator(op_name, m, cutoff, weights);
    const auto any = load_lightfield(lf_dir);
    FocalStack result;
    FssProvenance prov;
    RowRange r;
    json diag = json::array();
    if (const auto* lf = std::get_if<LightField3D>(&any)) {
        const auto cfg = axis.config(lf->disparity_range());
        prov = provenance_of(*lf, cfg);
        r = rows_text.empty() ? RowRange{0, lf->height()} : parse_rows(rows_text, lf->height());
        auto res = antialias_lightfield(*lf, cfg, op, r, c.threads);
        std::size_t warnings = 0;
        double worst = 0.0;
        for (const auto& d : res.rows) {
            warnings += d.symmetry_warning;
            worst = std::max(worst, d.symmetry_residual);
        }
        diag = {{"max_symmetry_residual", worst}, {"symmetry_warnings", warnings}};
        result = std::move(res.stack);
    } else {
        if (!rows_text.empty()) throw InputError("--rows is not supported for 4D light fields");
        const auto& lf4 = std::get<LightField4D>(any);
        const auto cfg = axis.config(lf4.disparity_range());
        prov = {cfg.delta_alpha, cfg.d_min, lf4.num_u(), lf4.u_ref(), lf4.baseline_unit()};
        r = {0, lf4.height()};
        result = antialias_4d(lf4, cfg, op, c.threads);
    }
    make_dir(out);
    write_fstk(out / "stack.fstk", result);
    write_provenance(out / "stack.fstk", prov);
    if (pngs) save_layers(out, result);

    json s = {{"operator", operator_name(op)}, {"rows", {r.begin, r.end}},
              {"layers", result.num_layers()}, {"diagnostics", diag},
              {"output", (out / "stack.fstk").string()}};
    std::ostringstream t;
    t << operator_name(op) << ": rows " << r.begin << ".." << r.end << ", " << result.num_layers()
      << " layers -> " << (out / "stack.fstk").string() << "\n";
    if (gt_dir) {
        // reference stack from the dense light field on the same focal axis,
        // and the plain refocus of the input as the aliased baseline
        AxisFlags same = axis;
        same.d_min = result.d_min();
        same.layers = result.num_layers();
        same.delta_alpha = result.delta_alpha();
        FssProvenance unused;
        const auto gt = rows_of(refocus_any(load_lightfield(*gt_dir), same, c.threads, unused), r);
        const auto aliased = rows_of(refocus_any(any, same, c.threads, unused), r);
        const auto sp = ssim_params(result);
        const auto out_rep = evaluate_stack(result, gt, sp, c.threads);
        const auto in_rep = evaluate_stack(aliased, gt, sp, c.threads);
        const auto rel = relative_metrics(out_rep, in_rep);
        write_text(out / "metrics.csv", report_csv(rel));
        s["ssim_window"] = sp.window;
        s["mean_psnr"] = opt_json(out_rep.mean_psnr);
        s["mean_ssim"] = out_rep.mean_ssim;
        s["input_mean_psnr"] = opt_json(in_rep.mean_psnr);
        s["mean_rel_psnr"] = opt_json(rel.mean_rel_psnr);
        s["mean_rel_ssim"] = opt_json(rel.mean_rel_ssim);
        t << "  mean psnr " << opt_str(out_rep.mean_psnr) << " dB (input " << opt_str(in_rep.mean_psnr)
          << "), rel " << opt_str(rel.mean_rel_psnr) << " dB, rel ssim " << opt_str(rel.mean_rel_ssim) << "\n";
    }
    write_text(out / "report.json", s.dump(2) + "\n");
    emit(c, s, t.str());
    return 0;
}

int cmd_metrics(const Common& c, const fs::path& out_path, const fs::path& gt_path,
                const std::optional<fs::path>& input_path, const std::optional<fs::path>& csv_path) {
    const auto out = read_fstk(out_path);
    const auto gt = read_fstk(gt_path);
    const auto sp = ssim_params(out);
    if (sp.window != SsimParams{}.window) std::cerr << "note: ssim window reduced to " << sp.window << "\n";
    auto rep = evaluate_stack(out, gt, sp, c.threads);
    if (input_path) rep = relative_metrics(rep, evaluate_stack(read_fstk(*input_path), gt, sp, c.threads));
    if (csv_path) write_text(*csv_path, report_csv(rep));
    if (c.json_out) {
        std::cout << report_json(rep) << "\n";
    } else {
        std::cout << report_csv(rep);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"focal stack spectrum tools"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    common.threads = default_thread_count();
    app.add_flag("--json", common.json_out, "machine-readable summary on stdout");
    app.add_option("--threads", common.threads, "worker threads (default FOCALSPEC_THREADS or all cores)")
        ->check(CLI::PositiveNumber);

    fs::path spec_path, lf_dir, out, in, gt_path;
    std::size_t downsample = 1;
    auto* gen = app.add_subcommand("gen", "render a synthetic light field from a JSON scene");
    gen->add_option("spec", spec_path, "scene description")->required();
    gen->add_option("-o,--out", out, "output directory")->required();
    gen->add_option("--downsample", downsample, "keep every s-th view")->check(CLI::PositiveNumber);

    AxisFlags axis;
    bool no_png = false;
    auto* refocus = app.add_subcommand("refocus", "focal stack of a light field");
    refocus->add_option("lightfield", lf_dir, "light field directory")->required();
    refocus->add_option("-o,--out", out, "output directory")->required();
    refocus->add_flag("--no-png", no_png, "skip the per-layer PNGs");
    axis.add(refocus);

    std::string rows_text;
    ProvFlags prov;
    std::optional<fs::path> png_dir;
    auto* fss = app.add_subcommand("fss", "spectra of focal-stack rows");
    fss->add_option("stack", in, "FSTK file")->required();
    fss->add_option("-o,--out", out, "FSSP file")->required();
    fss->add_option("--rows", rows_text, "row range a..b (half open)");
    fss->add_option("--png", png_dir, "directory for log-magnitude heatmaps");
    prov.add(fss);

    std::size_t row = 0, radius = 1;
    auto* analyze = app.add_subcommand("analyze", "cone geometry report for one row");
    analyze->add_option("stack", in, "FSTK file")->required();
    analyze->add_option("-o,--out", out, "output directory")->required();
    analyze->add_option("--row", row, "image row")->required();
    analyze->add_option("--radius", radius, "mask dilation in bins")->capture_default_str();
    prov.add(analyze);

    std::string op_name = "analytic";
    std::size_t m = 14;
    double cutoff = 0.5;
    std::optional<fs::path> weights, gt_dir;
    auto* aa = app.add_subcommand("antialias", "anti-aliased focal stack");
    aa->add_option("lightfield", lf_dir, "light field directory")->required();
    aa->add_option("-o,--out", out, "output directory")->required();
    aa->add_option("--op", op_name, "analytic|lowpass|neural")
        ->check(CLI::IsMember({"analytic", "lowpass", "neural"}))
        ->capture_default_str();
    aa->add_option("--m", m, "views inserted per gap (analytic)")->capture_default_str();
    aa->add_option("--cutoff", cutoff, "kept fraction of the band (lowpass)")->capture_default_str();
    aa->add_option("--weights", weights, "FSSW weights file (neural)");
    aa->add_option("--rows", rows_text, "row range a..b (half open)");
    aa->add_option("--gt", gt_dir, "dense light field for the metrics report");
    aa->add_flag("--no-png", no_png, "skip the per-layer PNGs");
    axis.add(aa);

    std::optional<fs::path> input_path, csv_path;
    auto* met = app.add_subcommand("metrics", "per-layer PSNR/SSIM of two stacks");
    met->add_option("output", in, "FSTK under test")->required();
    met->add_option("gt", gt_path, "reference FSTK")->required();
    met->add_option("--input", input_path, "aliased FSTK; report differences against it");
    met->add_option("--csv", csv_path, "also write the CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen) return cmd_gen(common, spec_path, out, downsample);
        if (*refocus) return cmd_refocus(common, lf_dir, out, axis, !no_png);
        if (*fss) return cmd_fss(common, in, out, rows_text, prov, png_dir);
        if (*analyze) return cmd_analyze(common, in, out, row, prov, radius);
        if (*aa) {
            return cmd_antialias(common, lf_dir, out, axis, op_name, m, cutoff, weights, rows_text,
                                 gt_dir, !no_png);
        }
        if (*met) return cmd_metrics(common, in, gt_path, input_path, csv_path);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

// numpy front end for the focal-stack library.
//
// Arrays cross the boundary by copy. Light fields are (views, H, W, C) float32,
// focal stacks (layers, H, W, C), per-row slices (layers, W), and spectra are
// complex128 (rows, cols) with the zero frequency at (rows // 2, cols // 2).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <memory>
#include <optional>
#include <string>

#include "focalspec/antialias.hpp"
#include "focalspec/cone_geometry.hpp"
#include "focalspec/error.hpp"
#include "focalspec/formats.hpp"
#include "focalspec/lightfield.hpp"
#include "focalspec/metrics.hpp"
#include "focalspec/refocus.hpp"
#include "focalspec/spectrum.hpp"
#include "focalspec/unet.hpp"

namespace py = pybind11;
using namespace focalspec;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using C128 = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

BoundaryPolicy parse_boundary(const std::string& s) {
    if (s == "renormalize") return BoundaryPolicy::renormalize;
    if (s == "zero") return BoundaryPolicy::zero;
    throw InputError("boundary must be 'renormalize' or 'zero'");
}

RefocusConfig make_config(double d_min, double d_max, double delta_alpha, const std::string& boundary) {
    RefocusConfig c{d_min, d_max, delta_alpha, parse_boundary(boundary)};
    c.validate();
    return c;
}

LightField3D lf_from_array(F32 a, std::size_t u_ref, double baseline, std::pair<double, double> range) {
    if (a.ndim() == 3) a = a.reshape({a.shape(0), a.shape(1), a.shape(2), py::ssize_t{1}});
    if (a.ndim() != 4) throw InputError("light field must be (views, H, W) or (views, H, W, C)");
    LightField3D lf(a.shape(0), a.shape(1), a.shape(2), a.shape(3), u_ref, baseline, {range.first, range.second});
    std::copy(a.data(), a.data() + a.size(), lf.data().begin());
    return lf;
}

F32 lf_to_array(const LightField3D& lf) {
    F32 out({lf.num_views(), lf.height(), lf.width(), lf.channels()});
    std::copy(lf.data().begin(), lf.data().end(), out.mutable_data());
    return out;
}

F32 stack_to_array(const FocalStack& s) {
    F32 out({s.num_layers(), s.height(), s.width(), s.channels()});
    std::copy(s.data().begin(), s.data().end(), out.mutable_data());
    return out;
}

// (layers, W) or (layers, W, C) -> height-1 stack
FocalStack slice_from_array(F32 a, double d_min, double delta_alpha) {
    if (a.ndim() == 2) a = a.reshape({a.shape(0), a.shape(1), py::ssize_t{1}});
    if (a.ndim() != 3) throw InputError("slice must be (layers, W) or (layers, W, C)");
    FocalStack s(a.shape(0), 1, a.shape(1), a.shape(2), d_min, delta_alpha);
    std::copy(a.data(), a.data() + a.size(), s.data().begin());
    return s;
}

F32 slice_to_array(const FocalStack& s, bool squeeze) {
    std::vector<py::ssize_t> shape{py::ssize_t(s.num_layers()), py::ssize_t(s.width())};
    if (!squeeze || s.channels() != 1) shape.push_back(py::ssize_t(s.channels()));
    F32 out(shape);
    std::copy(s.data().begin(), s.data().end(), out.mutable_data());
    return out;
}

// (rows, cols) or (C, rows, cols)
Fss fss_from_array(C128 a, const FssProvenance& p = {}) {
    if (a.ndim() == 2) a = a.reshape({py::ssize_t{1}, a.shape(0), a.shape(1)});
    if (a.ndim() != 3) throw InputError("spectrum must be (rows, cols) or (C, rows, cols)");
    Fss f(a.shape(1), a.shape(2), a.shape(0), p);
    std::copy(a.data(), a.data() + a.size(), f.data().begin());
    return f;
}

C128 fss_to_array(const Fss& f, bool squeeze) {
    std::vector<py::ssize_t> shape{py::ssize_t(f.rows()), py::ssize_t(f.cols())};
    if (!squeeze || f.channels() != 1) shape.insert(shape.begin(), py::ssize_t(f.channels()));
    C128 out(shape);
    std::copy(f.data().begin(), f.data().end(), out.mutable_data());
    return out;
}

py::array_t<bool> mask_to_array(const SpectralMask& m) {
    py::array_t<bool> out({m.rows, m.cols});
    std::transform(m.bits.begin(), m.bits.end(), out.mutable_data(), [](std::uint8_t b) { return b != 0; });
    return out;
}

SpectralMask mask_from_array(const py::array_t<bool, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw InputError("mask must be 2D");
    SpectralMask m(a.shape(0), a.shape(1));
    std::transform(a.data(), a.data() + a.size(), m.bits.begin(), [](bool b) { return b ? 1 : 0; });
    return m;
}

Image image_from_array(F32 a) {
    if (a.ndim() == 2) a = a.reshape({a.shape(0), a.shape(1), py::ssize_t{1}});
    if (a.ndim() != 3) throw InputError("image must be (H, W) or (H, W, C)");
    Image img(a.shape(0), a.shape(1), a.shape(2));
    std::copy(a.data(), a.data() + a.size(), img.data().begin());
    return img;
}

CompletionOperator make_operator(const std::string& op, std::size_t m, double cutoff,
                                 const std::optional<std::filesystem::path>& weights) {
    if (op == "analytic") return AnalyticReplicate{m};
    if (op == "lowpass") return EpiLowpass{cutoff};
    if (op == "neural") {
        if (!weights) throw InputError("op 'neural' needs weights");
        return NeuralCompletion{std::make_shared<const CompletionNetwork>(read_weights(*weights)), 5};
    }
    throw InputError("op must be 'analytic', 'lowpass' or 'neural'");
}

py::dict report_dict(const LayerReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? py::object(py::float_(*v)) : py::object(py::none()); };
    py::list layers;
    for (const auto& l : r.layers) {
        py::dict d;
        d["f"] = l.f;
        d["psnr"] = l.psnr.infinite ? std::numeric_limits<double>::infinity() : l.psnr.db;
        d["ssim"] = l.ssim;
        d["rel_psnr"] = opt(l.rel_psnr);
        d["rel_ssim"] = opt(l.rel_ssim);
        layers.append(d);
    }
    py::dict out;
    out["layers"] = layers;
    out["mean_psnr"] = opt(r.mean_psnr);
    out["mean_ssim"] = r.mean_ssim;
    out["mean_rel_psnr"] = opt(r.mean_rel_psnr);
    out["mean_rel_ssim"] = opt(r.mean_rel_ssim);
    return out;
}

}  // namespace

PYBIND11_MODULE(_focalspec, m) {
    m.doc() = "focal stack spectrum analysis and anti-aliasing";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

    py::class_<RefocusConfig>(m, "RefocusConfig")
        .def(py::init(&make_config), py::arg("d_min") = -1.0, py::arg("d_max") = 0.98,
             py::arg("delta_alpha") = 0.01, py::arg("boundary") = "renormalize")
        .def_static("with_layers",
                    [](double d_min, double delta_alpha, std::size_t layers, const std::string& b) {
                        return RefocusConfig::with_layers(d_min, delta_alpha, layers, parse_boundary(b));
                    },
                    py::arg("d_min"), py::arg("delta_alpha"), py::arg("layers"), py::arg("boundary") = "renormalize")
        .def_readonly("d_min", &RefocusConfig::d_min)
        .def_readonly("d_max", &RefocusConfig::d_max)
        .def_readonly("delta_alpha", &RefocusConfig::delta_alpha)
        .def_property_readonly("layer_count", &RefocusConfig::layer_count)
        .def_property_readonly("focal_axis", &RefocusConfig::focal_axis);

    py::class_<LightField3D>(m, "LightField")
        .def(py::init(&lf_from_array), py::arg("views"), py::arg("u_ref"), py::arg("baseline_unit") = 1.0,
             py::arg("disparity_range") = std::pair{-1.0, 0.98})
        .def_property_readonly("num_views", &LightField3D::num_views)
        .def_property_readonly("height", &LightField3D::height)
        .def_property_readonly("width", &LightField3D::width)
        .def_property_readonly("channels", &LightField3D::channels)
        .def_property_readonly("u_ref", &LightField3D::u_ref)
        .def_property_readonly("baseline_unit", &LightField3D::baseline_unit)
        .def_property_readonly("disparity_range",
                               [](const LightField3D& lf) {
                                   return std::pair{lf.disparity_range().min, lf.disparity_range().max};
                               })
        .def("array", &lf_to_array, "copy as (views, H, W, C) float32")
        .def("epi", [](const LightField3D& lf, std::size_t y) {
            if (y >= lf.height()) throw InputError("row out of range");
            const Epi e = extract_epi(lf, y);
            F32 out({e.num_views(), e.width(), e.channels()});
            std::copy(e.data().begin(), e.data().end(), out.mutable_data());
            return out;
        }, py::arg("y"))
        .def("downsample", &downsample_views, py::arg("factor"));

    py::class_<FocalStack>(m, "FocalStack")
        .def_property_readonly("num_layers", &FocalStack::num_layers)
        .def_property_readonly("height", &FocalStack::height)
        .def_property_readonly("width", &FocalStack::width)
        .def_property_readonly("channels", &FocalStack::channels)
        .def_property_readonly("d_min", &FocalStack::d_min)
        .def_property_readonly("delta_alpha", &FocalStack::delta_alpha)
        .def_property_readonly("focal_axis", &FocalStack::focal_axis)
        .def("array", &stack_to_array, "copy as (layers, H, W, C) float32")
        .def("row", [](const FocalStack& s, std::size_t y) {
            if (y >= s.height()) throw InputError("row out of range");
            return slice_to_array(s.row(y), true);
        }, py::arg("y"), "(layers, W) slice of one image row");

    m.def("render_scene", [](const std::string& json) { return render_synthetic(parse_scene_spec(json)); },
          py::arg("spec_json"), "render a synthetic scene from its JSON description");
    m.def("load_lightfield", &load_lightfield3d, py::arg("directory"));
    m.def("save_lightfield", py::overload_cast<const std::filesystem::path&, const LightField3D&>(&save_lightfield),
          py::arg("directory"), py::arg("lightfield"));

    m.def("refocus", [](const LightField3D& lf, const RefocusConfig& cfg, unsigned threads) {
        py::gil_scoped_release release;
        return build_focal_stack(lf, cfg, threads);
    }, py::arg("lightfield"), py::arg("config") = RefocusConfig{}, py::arg("threads") = 0);

    m.def("refocus_epi", [](F32 epi, std::size_t u_ref, double baseline, const RefocusConfig& cfg) {
        if (epi.ndim() == 2) epi = epi.reshape({epi.shape(0), epi.shape(1), py::ssize_t{1}});
        if (epi.ndim() != 3) throw InputError("epi must be (views, W) or (views, W, C)");
        Epi e(epi.shape(0), epi.shape(1), epi.shape(2), u_ref, baseline);
        std::copy(epi.data(), epi.data() + epi.size(), e.data().begin());
        return slice_to_array(build_focal_stack(e, cfg), epi.shape(2) == 1);
    }, py::arg("epi"), py::arg("u_ref"), py::arg("baseline_unit") = 1.0, py::arg("config") = RefocusConfig{});

    m.def("fss_forward", [](F32 slice) {
        const bool squeeze = slice.ndim() == 2;
        return fss_to_array(fss_forward(slice_from_array(slice, 0.0, 1.0)), squeeze);
    }, py::arg("slice"), "centered unitary 2D DFT of a (layers, W[, C]) slice");

    m.def("fss_inverse", [](C128 spectrum) {
        const bool squeeze = spectrum.ndim() == 2;
        const auto r = fss_inverse(fss_from_array(spectrum));
        py::dict out;
        out["slice"] = slice_to_array(r.slice, squeeze);
        out["imaginary_rms"] = r.imaginary_rms;
        out["signal_rms"] = r.signal_rms;
        out["symmetry_warning"] = r.symmetry_warning;
        return out;
    }, py::arg("spectrum"));

    m.def("conj_symmetry_residual", [](C128 s) { return conj_symmetry_residual(fss_from_array(s)); },
          py::arg("spectrum"));

    m.def("apex_angle", &apex_angle, py::arg("delta_alpha"), py::arg("num_views"), py::arg("baseline_unit") = 1.0);

    m.def("line_mask", [](std::size_t rows, std::size_t cols, double delta_alpha, std::size_t num_views,
                          std::size_t u_ref, double baseline, std::size_t radius) {
        return mask_to_array(line_mask(ConeModel::make(delta_alpha, num_views, u_ref, baseline), rows, cols, radius));
    }, py::arg("rows"), py::arg("cols"), py::arg("delta_alpha"), py::arg("num_views"), py::arg("u_ref"),
       py::arg("baseline_unit") = 1.0, py::arg("radius") = 1);

    m.def("support_mask", [](std::size_t rows, std::size_t cols, double delta_alpha, std::size_t num_views,
                             std::size_t u_ref, double baseline, std::size_t radius) {
        return mask_to_array(support_mask(ConeModel::make(delta_alpha, num_views, u_ref, baseline), rows, cols, radius));
    }, py::arg("rows"), py::arg("cols"), py::arg("delta_alpha"), py::arg("num_views"), py::arg("u_ref"),
       py::arg("baseline_unit") = 1.0, py::arg("radius") = 1);

    m.def("energy_concentration", [](C128 s, const py::array_t<bool, py::array::c_style | py::array::forcecast>& mask,
                                     std::size_t dc_patch) {
        return energy_concentration(fss_from_array(s), mask_from_array(mask), dc_patch);
    }, py::arg("spectrum"), py::arg("mask"), py::arg("dc_patch") = 5);

    m.def("detect_spectral_lines", [](C128 s, double delta_alpha, double offset_unit) {
        return detect_spectral_lines(fss_from_array(s), delta_alpha, offset_unit);
    }, py::arg("spectrum"), py::arg("delta_alpha"), py::arg("offset_unit") = 1.0,
       "view offsets of the detected lines, in units of offset_unit");

    m.def("antialias", [](const LightField3D& lf, const RefocusConfig& cfg, const std::string& op, std::size_t m_ins,
                          double cutoff, std::optional<std::filesystem::path> weights,
                          std::optional<std::pair<std::size_t, std::size_t>> rows, unsigned threads) {
        const auto oper = make_operator(op, m_ins, cutoff, weights);
        std::optional<RowRange> range;
        if (rows) range = RowRange{rows->first, rows->second};
        py::gil_scoped_release release;
        return antialias_lightfield(lf, cfg, oper, range, threads).stack;
    }, py::arg("lightfield"), py::arg("config") = RefocusConfig{}, py::arg("op") = "analytic", py::arg("m") = 14,
       py::arg("cutoff") = 0.5, py::arg("weights") = py::none(), py::arg("rows") = py::none(),
       py::arg("threads") = 0);

    m.def("psnr", [](F32 a, F32 b) {
        const auto p = psnr(image_from_array(a), image_from_array(b));
        return p.infinite ? std::numeric_limits<double>::infinity() : p.db;
    }, py::arg("a"), py::arg("b"));
    m.def("ssim", [](F32 a, F32 b) { return ssim(image_from_array(a), image_from_array(b)); }, py::arg("a"),
          py::arg("b"));
    m.def("evaluate_stack", [](const FocalStack& out, const FocalStack& gt, std::optional<FocalStack> input) {
        auto rep = evaluate_stack(out, gt);
        if (input) rep = relative_metrics(rep, evaluate_stack(*input, gt));
        return report_dict(rep);
    }, py::arg("output"), py::arg("gt"), py::arg("input") = py::none(),
       "per-layer PSNR/SSIM; with `input`, also the differences against it");

    m.def("read_fstk", &read_fstk, py::arg("path"));
    m.def("write_fstk", &write_fstk, py::arg("path"), py::arg("stack"));
}

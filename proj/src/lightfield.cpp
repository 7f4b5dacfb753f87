#include "focalspec/lightfield.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "focalspec/error.hpp"
#include "focalspec/image_io.hpp"

namespace focalspec {
namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic lattice value in [0, 1).
double lattice_value(std::uint64_t seed, std::int64_t cell, std::size_t row, std::size_t channel) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(cell));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(row) << 20));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(channel) << 52));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double texture_value(const Primitive& p, double scene_x, std::size_t row, std::size_t channel) {
    const double s = (scene_x - p.x) / p.texel_size;
    const double cell = std::floor(s);
    const double t = s - cell;
    const auto c = static_cast<std::int64_t>(cell);
    const double noise = (1.0 - t) * lattice_value(p.seed, c, row, channel) +
                         t * lattice_value(p.seed, c + 1, row, channel);
    return p.intensity * (1.0 - p.texture_contrast + p.texture_contrast * noise);
}

/// Tent splat of one sample at fractional position `pos`.
template <class Fn>
void splat(double pos, std::size_t width, Fn&& add) {
    const double base = std::floor(pos);
    const double t = pos - base;
    const auto i = static_cast<std::int64_t>(base);
    if (i >= 0 && i < static_cast<std::int64_t>(width)) add(static_cast<std::size_t>(i), 1.0 - t);
    if (t > 0.0 && i + 1 >= 0 && i + 1 < static_cast<std::int64_t>(width)) {
        add(static_cast<std::size_t>(i + 1), t);
    }
}

std::size_t plane_samples(const Primitive& p) {
    return static_cast<std::size_t>(std::ceil(p.x_end - p.x));
}

bool covers_row(const Primitive& p, std::size_t row) {
    if (p.kind == PrimitiveKind::textured_plane || !p.y) return true;
    return static_cast<std::size_t>(std::lround(*p.y)) == row;
}

std::filesystem::path view_path(const std::filesystem::path& dir, std::size_t v, std::size_t u,
                                const char* ext) {
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03zu_%03zu.%s", v, u, ext);
    return dir / name;
}

Image load_view(const std::filesystem::path& dir, std::size_t v, std::size_t u) {
    for (const char* ext : {"png", "pfm"}) {
        auto p = view_path(dir, v, u, ext);
        if (std::filesystem::exists(p)) return read_image(p);
    }
    throw InputError("missing view " + view_path(dir, v, u, "png").filename().string() + " in " +
                     dir.string());
}

void write_manifest(const std::filesystem::path& dir, const LightFieldManifest& m) {
    json j = {{"num_u", m.num_u},
              {"num_v", m.num_v},
              {"u_ref", m.u_ref},
              {"v_ref", m.v_ref},
              {"baseline_unit", m.baseline_unit},
              {"disparity_range", {m.disparity_range.min, m.disparity_range.max}}};
    std::ofstream out(dir / "lightfield.json");
    if (!out) throw InputError("cannot write manifest in " + dir.string());
    out << j.dump(2) << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------

LightField3D::LightField3D(std::size_t num_views, std::size_t height, std::size_t width,
                           std::size_t channels, std::size_t u_ref, double baseline_unit,
                           DisparityRange range)
    : num_views_(num_views), height_(height), width_(width), channels_(channels), u_ref_(u_ref),
      baseline_unit_(baseline_unit), range_(range),
      data_(num_views * height * width * channels, 0.0f) {
    if (num_views == 0) throw InputError("light field needs at least one view");
    if (u_ref >= num_views) throw InputError("u_ref out of range");
    if (!(baseline_unit > 0.0)) throw InputError("baseline_unit must be positive");
    if (range.min > range.max) throw InputError("disparity range has min > max");
}

void LightField3D::set_disparity_range(DisparityRange range) {
    if (range.min > range.max) throw InputError("disparity range has min > max");
    range_ = range;
}

Image LightField3D::view(std::size_t u) const {
    Image image(height_, width_, channels_);
    const std::size_t n = height_ * width_ * channels_;
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(u * n), n, image.data().begin());
    return image;
}

void LightField3D::set_view(std::size_t u, const Image& image) {
    if (image.height() != height_ || image.width() != width_ || image.channels() != channels_) {
        throw InputError("view " + std::to_string(u) + " has inconsistent dimensions");
    }
    std::copy(image.data().begin(), image.data().end(),
              data_.begin() + static_cast<std::ptrdiff_t>(u * image.size()));
}

void LightField3D::check_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) throw InputError("light field contains a non-finite intensity");
    }
}

LightField4D::LightField4D(std::size_t num_v, std::size_t num_u, std::size_t height,
                           std::size_t width, std::size_t channels, std::size_t v_ref,
                           std::size_t u_ref, double baseline_unit, DisparityRange range)
    : num_v_(num_v), num_u_(num_u), height_(height), width_(width), channels_(channels),
      v_ref_(v_ref), u_ref_(u_ref), baseline_unit_(baseline_unit), range_(range),
      data_(num_v * num_u * height * width * channels, 0.0f) {
    if (num_v == 0 || num_u == 0) throw InputError("light field needs at least one view");
    if (u_ref >= num_u || v_ref >= num_v) throw InputError("reference view out of range");
    if (!(baseline_unit > 0.0)) throw InputError("baseline_unit must be positive");
}

LightField3D LightField4D::horizontal(std::size_t v) const {
    LightField3D lf(num_u_, height_, width_, channels_, u_ref_, baseline_unit_, range_);
    const std::size_t n = num_u_ * height_ * width_ * channels_;
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(v * n), n, lf.data().begin());
    return lf;
}

Epi::Epi(std::size_t num_views, std::size_t width, std::size_t channels, std::size_t u_ref,
         double baseline_unit)
    : num_views_(num_views), width_(width), channels_(channels), u_ref_(u_ref),
      baseline_unit_(baseline_unit), data_(num_views * width * channels, 0.0f) {
    if (num_views == 0) throw InputError("EPI needs at least one view");
    if (u_ref >= num_views) throw InputError("u_ref out of range");
}

// ---------------------------------------------------------------------------

void SyntheticSceneSpec::validate() const {
    if (width == 0 || height == 0) throw InputError("scene width and height must be positive");
    if (num_views == 0) throw InputError("scene needs at least one view");
    if (u_ref >= num_views) throw InputError("u_ref out of range");
    if (channels == 0) throw InputError("scene needs at least one channel");
    if (!(baseline_unit > 0.0)) throw InputError("baseline_unit must be positive");
    if (disparity_range.min > disparity_range.max) throw InputError("disparity range has min > max");
    for (std::size_t i = 0; i < primitives.size(); ++i) {
        const auto& p = primitives[i];
        const std::string where = "primitive " + std::to_string(i) + ": ";
        if (!std::isfinite(p.x) || p.x < 0.0 || p.x >= static_cast<double>(width)) {
            throw InputError(where + "x outside [0, width)");
        }
        if (!std::isfinite(p.disparity) || p.disparity < disparity_range.min ||
            p.disparity > disparity_range.max) {
            throw InputError(where + "disparity outside the declared range");
        }
        if (p.kind == PrimitiveKind::point && p.y &&
            (*p.y < 0.0 || *p.y >= static_cast<double>(height))) {
            throw InputError(where + "y outside [0, height)");
        }
        if (p.kind == PrimitiveKind::textured_plane) {
            if (!(p.x_end > p.x)) throw InputError(where + "x_end must exceed x");
            if (!(p.texel_size > 0.0)) throw InputError(where + "texel_size must be positive");
        }
    }
}

SyntheticSceneSpec parse_scene_spec(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed scene spec: ") + e.what());
    }
    SyntheticSceneSpec spec;
    try {
        spec.width = j.at("width").get<std::size_t>();
        spec.height = j.value("height", std::size_t{1});
        spec.num_views = j.at("num_views").get<std::size_t>();
        spec.u_ref = j.value("u_ref", spec.num_views / 2);
        spec.channels = j.value("channels", std::size_t{1});
        spec.baseline_unit = j.value("baseline_unit", 1.0);
        if (j.contains("disparity_range")) {
            const auto& r = j.at("disparity_range");
            spec.disparity_range = {r.at(0).get<double>(), r.at(1).get<double>()};
        }
        const auto global_seed = j.value("seed", std::uint64_t{0});
        for (const auto& item : j.value("primitives", json::array())) {
            Primitive p;
            const auto kind = item.at("kind").get<std::string>();
            if (kind == "point") {
                p.kind = PrimitiveKind::point;
            } else if (kind == "textured_plane" || kind == "textured-plane") {
                p.kind = PrimitiveKind::textured_plane;
            } else {
                throw InputError("unknown primitive kind '" + kind + "'");
            }
            p.x = item.at("x").get<double>();
            if (item.contains("y")) p.y = item.at("y").get<double>();
            p.x_end = item.value("x_end", static_cast<double>(spec.width));
            p.disparity = item.at("disparity").get<double>();
            p.intensity = item.value("intensity", 1.0);
            p.texture_contrast = item.value("contrast", 1.0);
            p.texel_size = item.value("texel_size", 1.0);
            p.seed = splitmix64(global_seed) ^ item.value("seed", std::uint64_t{0});
            spec.primitives.push_back(p);
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed scene spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

LightField3D render_synthetic(const SyntheticSceneSpec& spec) {
    spec.validate();
    LightField3D lf(spec.num_views, spec.height, spec.width, spec.channels, spec.u_ref,
                    spec.baseline_unit, spec.disparity_range);
    const std::size_t w = spec.width;
    const std::size_t nc = spec.channels;
    std::vector<double> color(w * nc), layer(w * nc), alpha(w);

    for (std::size_t u = 0; u < spec.num_views; ++u) {
        const double offset = lf.view_offset(u);
        for (std::size_t y = 0; y < spec.height; ++y) {
            std::fill(color.begin(), color.end(), 0.0);
            for (const auto& p : spec.primitives) {
                if (!covers_row(p, y)) continue;
                std::fill(layer.begin(), layer.end(), 0.0);
                std::fill(alpha.begin(), alpha.end(), 0.0);
                const double shift = -p.disparity * offset;
                if (p.kind == PrimitiveKind::point) {
                    splat(p.x + shift, w, [&](std::size_t x, double wt) {
                        alpha[x] += wt;
                        for (std::size_t c = 0; c < nc; ++c) layer[x * nc + c] += wt * p.intensity;
                    });
                } else {
                    const std::size_t samples = plane_samples(p);
                    for (std::size_t m = 0; m < samples; ++m) {
                        const double scene_x = p.x + static_cast<double>(m);
                        splat(scene_x + shift, w, [&](std::size_t x, double wt) {
                            alpha[x] += wt;
                            for (std::size_t c = 0; c < nc; ++c) {
                                layer[x * nc + c] += wt * texture_value(p, scene_x, y, c);
                            }
                        });
                    }
                }
                for (std::size_t x = 0; x < w; ++x) {
                    double a = alpha[x];
                    if (a <= 0.0) continue;
                    const double norm = a > 1.0 ? 1.0 / a : 1.0;
                    a = std::min(a, 1.0);
                    for (std::size_t c = 0; c < nc; ++c) {
                        color[x * nc + c] = color[x * nc + c] * (1.0 - a) + layer[x * nc + c] * norm;
                    }
                }
            }
            for (std::size_t x = 0; x < w; ++x) {
                for (std::size_t c = 0; c < nc; ++c) {
                    lf.at(u, y, x, c) = static_cast<float>(color[x * nc + c]);
                }
            }
        }
    }
    return lf;
}

std::vector<std::size_t> clipped_primitives(const SyntheticSceneSpec& spec) {
    std::vector<std::size_t> out;
    const double lo_off = -static_cast<double>(spec.u_ref) * spec.baseline_unit;
    const double hi_off =
        (static_cast<double>(spec.num_views) - 1.0 - static_cast<double>(spec.u_ref)) *
        spec.baseline_unit;
    const double last = static_cast<double>(spec.width) - 1.0;
    for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
        const auto& p = spec.primitives[i];
        const double first_x = p.x;
        const double last_x =
            p.kind == PrimitiveKind::point ? p.x : p.x + static_cast<double>(plane_samples(p)) - 1.0;
        double lo = first_x, hi = last_x;
        for (double off : {lo_off, hi_off}) {
            lo = std::min(lo, first_x - p.disparity * off);
            hi = std::max(hi, last_x - p.disparity * off);
        }
        if (lo < 0.0 || hi > last) out.push_back(i);
    }
    return out;
}

Epi extract_epi(const LightField3D& lf, std::size_t y) {
    if (y >= lf.height()) {
        throw InputError("row " + std::to_string(y) + " out of range [0, " +
                         std::to_string(lf.height()) + ")");
    }
    Epi epi(lf.num_views(), lf.width(), lf.channels(), lf.u_ref(), lf.baseline_unit());
    const std::size_t row = lf.width() * lf.channels();
    for (std::size_t u = 0; u < lf.num_views(); ++u) {
        const auto src = lf.data().subspan(((u * lf.height()) + y) * row, row);
        std::copy(src.begin(), src.end(), epi.data().begin() + static_cast<std::ptrdiff_t>(u * row));
    }
    return epi;
}

LightField3D stack_epis(std::span<const Epi> rows, DisparityRange range) {
    if (rows.empty()) throw InputError("no rows to stack");
    const auto& first = rows.front();
    LightField3D lf(first.num_views(), rows.size(), first.width(), first.channels(), first.u_ref(),
                    first.baseline_unit(), range);
    const std::size_t row = first.width() * first.channels();
    for (std::size_t y = 0; y < rows.size(); ++y) {
        const auto& e = rows[y];
        if (e.num_views() != first.num_views() || e.width() != first.width() ||
            e.channels() != first.channels()) {
            throw InputError("EPI rows have inconsistent shapes");
        }
        for (std::size_t u = 0; u < e.num_views(); ++u) {
            std::copy_n(e.data().begin() + static_cast<std::ptrdiff_t>(u * row), row,
                        lf.data().begin() + static_cast<std::ptrdiff_t>((u * rows.size() + y) * row));
        }
    }
    return lf;
}

LightField3D downsample_views(const LightField3D& lf, std::size_t factor) {
    if (factor == 0) throw InputError("downsampling factor must be >= 1");
    if ((lf.num_views() - 1) % factor != 0) {
        throw InputError("(N_u - 1) = " + std::to_string(lf.num_views() - 1) +
                         " is not divisible by " + std::to_string(factor));
    }
    const std::size_t kept = (lf.num_views() - 1) / factor + 1;
    // Nearest kept view to the old reference; ties go to the lower index.
    std::size_t new_ref = (lf.u_ref() + factor / 2) / factor;
    if (factor % 2 == 0 && lf.u_ref() % factor == factor / 2) new_ref = lf.u_ref() / factor;
    new_ref = std::min(new_ref, kept - 1);

    LightField3D out(kept, lf.height(), lf.width(), lf.channels(), new_ref,
                     lf.baseline_unit() * static_cast<double>(factor), lf.disparity_range());
    const std::size_t n = lf.height() * lf.width() * lf.channels();
    for (std::size_t k = 0; k < kept; ++k) {
        std::copy_n(lf.data().begin() + static_cast<std::ptrdiff_t>(k * factor * n), n,
                    out.data().begin() + static_cast<std::ptrdiff_t>(k * n));
    }
    return out;
}

// ---------------------------------------------------------------------------

LightFieldManifest read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "lightfield.json";
    std::ifstream in(path);
    if (!in) throw InputError("missing manifest " + path.string());
    LightFieldManifest m;
    try {
        const json j = json::parse(in);
        m.num_u = j.at("num_u").get<std::size_t>();
        m.num_v = j.value("num_v", std::size_t{1});
        m.u_ref = j.value("u_ref", m.num_u / 2);
        m.v_ref = j.value("v_ref", m.num_v / 2);
        m.baseline_unit = j.value("baseline_unit", 1.0);
        if (j.contains("disparity_range")) {
            const auto& r = j.at("disparity_range");
            m.disparity_range = {r.at(0).get<double>(), r.at(1).get<double>()};
        }
    } catch (const json::exception& e) {
        throw InputError("malformed manifest " + path.string() + ": " + e.what());
    }
    if (m.num_u == 0 || m.num_v == 0) throw InputError("manifest declares zero views");
    if (m.u_ref >= m.num_u || m.v_ref >= m.num_v) throw InputError("manifest reference view out of range");
    if (!(m.baseline_unit > 0.0)) throw InputError("manifest baseline_unit must be positive");
    if (m.disparity_range.min > m.disparity_range.max) {
        throw InputError("manifest disparity range has min > max");
    }
    return m;
}

AnyLightField load_lightfield(const std::filesystem::path& dir) {
    const auto m = read_manifest(dir);
    const Image first = load_view(dir, 0, 0);
    auto check = [&](const Image& img, std::size_t v, std::size_t u) {
        if (!img.same_shape(first)) {
            throw InputError("view (" + std::to_string(v) + ", " + std::to_string(u) +
                             ") has inconsistent dimensions");
        }
    };
    if (m.num_v == 1) {
        LightField3D lf(m.num_u, first.height(), first.width(), first.channels(), m.u_ref,
                        m.baseline_unit, m.disparity_range);
        for (std::size_t u = 0; u < m.num_u; ++u) {
            Image img = u == 0 ? first : load_view(dir, 0, u);
            check(img, 0, u);
            lf.set_view(u, img);
        }
        lf.check_finite();
        return lf;
    }
    LightField4D lf(m.num_v, m.num_u, first.height(), first.width(), first.channels(), m.v_ref,
                    m.u_ref, m.baseline_unit, m.disparity_range);
    const std::size_t n = first.size();
    for (std::size_t v = 0; v < m.num_v; ++v) {
        for (std::size_t u = 0; u < m.num_u; ++u) {
            Image img = (u == 0 && v == 0) ? first : load_view(dir, v, u);
            check(img, v, u);
            for (float value : img.data()) {
                if (!std::isfinite(value)) throw InputError("light field contains a non-finite intensity");
            }
            std::copy(img.data().begin(), img.data().end(),
                      lf.data().begin() + static_cast<std::ptrdiff_t>((v * m.num_u + u) * n));
        }
    }
    return lf;
}

LightField3D load_lightfield3d(const std::filesystem::path& dir) {
    auto any = load_lightfield(dir);
    if (auto* lf = std::get_if<LightField3D>(&any)) return std::move(*lf);
    throw InputError("expected a single-row (3D) light field in " + dir.string());
}

void save_lightfield(const std::filesystem::path& dir, const LightField3D& lf) {
    std::filesystem::create_directories(dir);
    for (std::size_t u = 0; u < lf.num_views(); ++u) {
        write_png(view_path(dir, 0, u, "png"), lf.view(u), 16);
    }
    write_manifest(dir, {lf.num_views(), 1, lf.u_ref(), 0, lf.baseline_unit(), lf.disparity_range()});
}

void save_lightfield(const std::filesystem::path& dir, const LightField4D& lf) {
    std::filesystem::create_directories(dir);
    for (std::size_t v = 0; v < lf.num_v(); ++v) {
        const auto row = lf.horizontal(v);
        for (std::size_t u = 0; u < lf.num_u(); ++u) write_png(view_path(dir, v, u, "png"), row.view(u), 16);
    }
    write_manifest(dir, {lf.num_u(), lf.num_v(), lf.u_ref(), lf.v_ref(), lf.baseline_unit(),
                         lf.disparity_range()});
}

}  // namespace focalspec

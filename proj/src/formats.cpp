#include "focalspec/formats.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

#include "binary_io.hpp"
#include "focalspec/error.hpp"

namespace focalspec {
namespace {

std::filesystem::path sidecar(const std::filesystem::path& p) {
    return std::filesystem::path(p.string() + ".json");
}

std::uint32_t u32_of(std::size_t v, const char* what) {
    if (v > 0xffffffffu) throw InputError(std::string(what) + " too large for the container");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_fstk(const std::filesystem::path& path, const FocalStack& stack) {
    detail::ByteWriter out;
    out.magic("FSTK");
    out.u32(kFstkVersion);
    out.u32(u32_of(stack.num_layers(), "layer count"));
    out.u32(u32_of(stack.height(), "height"));
    out.u32(u32_of(stack.width(), "width"));
    out.u32(u32_of(stack.channels(), "channel count"));
    out.f64(stack.d_min());
    out.f64(stack.delta_alpha());
    for (float v : stack.data()) out.f32(v);
    out.save(path);
}

FocalStack read_fstk(const std::filesystem::path& path) {
    detail::ByteReader in(path);
    in.expect_magic("FSTK");
    const auto version = in.u32();
    if (version != kFstkVersion) throw InputError(in.name() + ": unsupported FSTK version " + std::to_string(version));
    const std::size_t layers = in.u32(), h = in.u32(), w = in.u32(), c = in.u32();
    const double d_min = in.f64(), da = in.f64();
    if (!(da > 0.0)) throw InputError(in.name() + ": non-positive delta_alpha");
    const std::size_t n = layers * h * w * c;
    if (in.remaining() != n * 4) throw InputError(in.name() + ": payload size does not match the header");
    FocalStack stack(layers, h, w, c, d_min, da);
    for (auto& v : stack.data()) v = in.f32();
    return stack;
}

std::vector<std::uint8_t> encode_fssp(std::span<const Fss> rows) {
    if (rows.empty()) throw InputError("FSSP needs at least one row");
    const Fss& first = rows.front();
    for (const auto& r : rows) {
        if (!r.same_shape(first)) throw InputError("FSSP rows differ in shape");
    }
    const auto& prov = first.provenance();
    detail::ByteWriter out;
    out.magic("FSSP");
    out.u32(kFsspVersion);
    out.u32(u32_of(first.rows(), "layer count"));
    out.u32(u32_of(rows.size(), "height"));
    out.u32(u32_of(first.cols(), "width"));
    out.u32(u32_of(first.channels(), "channel count"));
    out.f64(prov.d_min);
    out.f64(prov.delta_alpha);
    out.u32(1);
    for (std::size_t i = 0; i < first.rows(); ++i) {
        for (const auto& r : rows) {
            for (std::size_t j = 0; j < first.cols(); ++j) {
                for (std::size_t c = 0; c < first.channels(); ++c) {
                    const Complex v = r.at(c, i, j);
                    out.f32(static_cast<float>(v.real()));
                    out.f32(static_cast<float>(v.imag()));
                }
            }
        }
    }
    return out.bytes();
}

void write_fssp(const std::filesystem::path& path, std::span<const Fss> rows) {
    const auto bytes = encode_fssp(rows);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<Fss> read_fssp(const std::filesystem::path& path) {
    detail::ByteReader in(path);
    in.expect_magic("FSSP");
    const auto version = in.u32();
    if (version != kFsspVersion) throw InputError(in.name() + ": unsupported FSSP version " + std::to_string(version));
    const std::size_t layers = in.u32(), h = in.u32(), w = in.u32(), c = in.u32();
    FssProvenance prov;
    prov.d_min = in.f64();
    prov.delta_alpha = in.f64();
    if (in.u32() != 1) throw InputError(in.name() + ": only complex FSSP payloads are supported");
    if (in.remaining() != layers * h * w * c * 8) {
        throw InputError(in.name() + ": payload size does not match the header");
    }
    if (auto side = read_provenance(path)) {
        prov.num_views = side->num_views;
        prov.u_ref = side->u_ref;
        prov.baseline_unit = side->baseline_unit;
    }
    std::vector<Fss> rows(h, Fss(layers, w, c, prov));
    for (std::size_t i = 0; i < layers; ++i) {
        for (auto& r : rows) {
            for (std::size_t j = 0; j < w; ++j) {
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const double re = in.f32();
                    const double im = in.f32();
                    r.at(ch, i, j) = Complex(re, im);
                }
            }
        }
    }
    return rows;
}

void write_provenance(const std::filesystem::path& data_path, const FssProvenance& p) {
    const nlohmann::json j = {{"delta_alpha", p.delta_alpha}, {"d_min", p.d_min},
                              {"num_views", p.num_views},     {"u_ref", p.u_ref},
                              {"baseline_unit", p.baseline_unit}};
    std::ofstream out(sidecar(data_path));
    if (!out) throw InputError("cannot write " + sidecar(data_path).string());
    out << j.dump(2) << '\n';
}

std::optional<FssProvenance> read_provenance(const std::filesystem::path& data_path) {
    const auto path = sidecar(data_path);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        const auto j = nlohmann::json::parse(in);
        FssProvenance p;
        p.delta_alpha = j.at("delta_alpha").get<double>();
        p.d_min = j.at("d_min").get<double>();
        p.num_views = j.at("num_views").get<std::size_t>();
        p.u_ref = j.at("u_ref").get<std::size_t>();
        p.baseline_unit = j.at("baseline_unit").get<double>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.string() + ": malformed provenance: " + e.what());
    }
}

}  // namespace focalspec

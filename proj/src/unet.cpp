#include "focalspec/unet.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "binary_io.hpp"
#include "focalspec/error.hpp"

namespace focalspec {
namespace {

using nlohmann::json;

constexpr std::uint32_t kConv2d = 1;
constexpr const char* kStreams[] = {"power", "phase", "refine"};
constexpr std::size_t kStreamIn[] = {1, 1, 2};
constexpr std::size_t kStreamOut[] = {1, 1, 2};

void add_unet_plan(std::vector<PlannedLayer>& plan, const NetworkArchitecture& arch,
                   const std::string& prefix, std::size_t in_c, std::size_t out_c) {
    const auto& ch = arch.channels;
    const std::size_t levels = arch.levels;
    const std::size_t k = arch.kernel;
    for (std::size_t e = 0; e < levels; ++e) {
        const std::size_t in = e == 0 ? in_c : ch[e - 1];
        const std::string name = prefix + ".enc" + std::to_string(e);
        plan.push_back({name + ".conv1", ch[e], in, k});
        plan.push_back({name + ".conv2", ch[e], ch[e], k});
    }
    const std::size_t deep = ch[levels - 1];
    plan.push_back({prefix + ".bottleneck.conv1", deep, deep, k});
    plan.push_back({prefix + ".bottleneck.conv2", deep, deep, k});
    for (std::size_t e = levels; e-- > 0;) {
        const std::size_t below = e + 1 == levels ? deep : ch[e + 1];
        const std::string name = prefix + ".dec" + std::to_string(e);
        plan.push_back({name + ".conv1", ch[e], below + ch[e], k});
        plan.push_back({name + ".conv2", ch[e], ch[e], k});
    }
    plan.push_back({prefix + ".head", out_c, ch[0], 1});
}

/// 'same' zero-padded convolution, optionally followed by leaky ReLU.
FeatureMap conv2d(const FeatureMap& in, const ConvLayer& layer, bool activate, float slope) {
    FeatureMap out(layer.out_channels, in.rows, in.cols);
    const auto kh = static_cast<std::ptrdiff_t>(layer.kernel_h);
    const auto kw = static_cast<std::ptrdiff_t>(layer.kernel_w);
    const std::ptrdiff_t ph = kh / 2, pw = kw / 2;
    const auto rows = static_cast<std::ptrdiff_t>(in.rows);
    const auto cols = static_cast<std::ptrdiff_t>(in.cols);

    for (std::size_t oc = 0; oc < layer.out_channels; ++oc) {
        float* dst = &out.data[oc * in.rows * in.cols];
        std::fill_n(dst, in.rows * in.cols, layer.bias[oc]);
        for (std::size_t ic = 0; ic < layer.in_channels; ++ic) {
            const float* src = &in.data[ic * in.rows * in.cols];
            const float* w = &layer.weights[(oc * layer.in_channels + ic) * layer.kernel_h * layer.kernel_w];
            for (std::ptrdiff_t ky = 0; ky < kh; ++ky) {
                const std::ptrdiff_t dy = ky - ph;
                const std::ptrdiff_t i_begin = std::max<std::ptrdiff_t>(0, -dy);
                const std::ptrdiff_t i_end = std::min(rows, rows - dy);
                for (std::ptrdiff_t kx = 0; kx < kw; ++kx) {
                    const float wv = w[ky * kw + kx];
                    if (wv == 0.0f) continue;
                    const std::ptrdiff_t dx = kx - pw;
                    const std::ptrdiff_t j_begin = std::max<std::ptrdiff_t>(0, -dx);
                    const std::ptrdiff_t j_end = std::min(cols, cols - dx);
                    for (std::ptrdiff_t i = i_begin; i < i_end; ++i) {
                        float* o = dst + i * cols;
                        const float* s = src + (i + dy) * cols + dx;
                        for (std::ptrdiff_t j = j_begin; j < j_end; ++j) o[j] += wv * s[j];
                    }
                }
            }
        }
    }
    if (activate) {
        for (auto& v : out.data) v = v >= 0.0f ? v : slope * v;
    }
    return out;
}

FeatureMap max_pool2(const FeatureMap& in) {
    FeatureMap out(in.channels, in.rows / 2, in.cols / 2);
    for (std::size_t c = 0; c < in.channels; ++c) {
        for (std::size_t i = 0; i < out.rows; ++i) {
            for (std::size_t j = 0; j < out.cols; ++j) {
                out.at(c, i, j) = std::max({in.at(c, 2 * i, 2 * j), in.at(c, 2 * i, 2 * j + 1),
                                            in.at(c, 2 * i + 1, 2 * j), in.at(c, 2 * i + 1, 2 * j + 1)});
            }
        }
    }
    return out;
}

/// Nearest-neighbour x2 upsampling of `low`, concatenated before `skip`.
FeatureMap upsample_concat(const FeatureMap& low, const FeatureMap& skip) {
    FeatureMap out(low.channels + skip.channels, skip.rows, skip.cols);
    for (std::size_t c = 0; c < low.channels; ++c) {
        for (std::size_t i = 0; i < skip.rows; ++i) {
            for (std::size_t j = 0; j < skip.cols; ++j) out.at(c, i, j) = low.at(c, i / 2, j / 2);
        }
    }
    std::copy(skip.data.begin(), skip.data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(low.channels * skip.rows * skip.cols));
    return out;
}

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

json architecture_json(const NetworkArchitecture& a, double residual) {
    return {{"levels", a.levels},
            {"channels", a.channels},
            {"kernel", a.kernel},
            {"leaky_slope", a.leaky_slope},
            {"upsample", a.upsample},
            {"pool", "max"},
            {"pad_multiple", a.pad_multiple()},
            {"power_compression", a.power_compression},
            {"stream_output", a.stream_output},
            {"validation_symmetry_residual", residual}};
}

}  // namespace

void NetworkArchitecture::validate() const {
    if (levels == 0 || channels.size() != levels) {
        throw InputError("architecture needs one channel count per level");
    }
    if (std::any_of(channels.begin(), channels.end(), [](std::size_t c) { return c == 0; })) {
        throw InputError("architecture channel counts must be positive");
    }
    if (kernel == 0 || kernel % 2 == 0) throw InputError("architecture kernel must be odd");
    if (upsample != "nearest") throw InputError("unsupported upsampling '" + upsample + "'");
    if (power_compression != "log1p_power") {
        throw InputError("unsupported power compression '" + power_compression + "'");
    }
    if (stream_output != "magnitude_phase") {
        throw InputError("unsupported stream output convention '" + stream_output + "'");
    }
}

std::vector<PlannedLayer> layer_plan(const NetworkArchitecture& arch) {
    arch.validate();
    std::vector<PlannedLayer> plan;
    for (std::size_t s = 0; s < 3; ++s) add_unet_plan(plan, arch, kStreams[s], kStreamIn[s], kStreamOut[s]);
    return plan;
}

void ModelWeights::validate() const {
    const auto plan = layer_plan(architecture);
    if (layers.size() != plan.size()) {
        throw InputError("weights hold " + std::to_string(layers.size()) + " layers, architecture needs " +
                         std::to_string(plan.size()));
    }
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& l = layers[i];
        const auto& p = plan[i];
        if (l.out_channels != p.out_channels || l.in_channels != p.in_channels ||
            l.kernel_h != p.kernel || l.kernel_w != p.kernel) {
            throw InputError("layer " + std::to_string(i) + " (" + l.name + ") does not chain: expected " +
                             p.name + " " + std::to_string(p.out_channels) + "x" +
                             std::to_string(p.in_channels) + "x" + std::to_string(p.kernel));
        }
        if (l.weights.size() != l.out_channels * l.in_channels * l.kernel_h * l.kernel_w ||
            l.bias.size() != l.out_channels) {
            throw InputError("layer " + l.name + " has a coefficient blob of the wrong size");
        }
        auto finite = [](float v) { return std::isfinite(v); };
        if (!std::all_of(l.weights.begin(), l.weights.end(), finite) ||
            !std::all_of(l.bias.begin(), l.bias.end(), finite)) {
            throw InputError("layer " + l.name + " has non-finite coefficients");
        }
    }
}

ModelWeights make_random_weights(const NetworkArchitecture& arch, std::uint64_t seed, double scale) {
    ModelWeights w;
    w.architecture = arch;
    std::mt19937_64 rng(seed);
    for (const auto& p : layer_plan(arch)) {
        ConvLayer layer{p.name, p.out_channels, p.in_channels, p.kernel, p.kernel, {}, {}};
        layer.weights.resize(p.out_channels * p.in_channels * p.kernel * p.kernel);
        layer.bias.resize(p.out_channels);
        // Map raw engine output directly so the values do not depend on the
        // standard library's distribution implementation.
        auto draw = [&] {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            return static_cast<float>((2.0 * u - 1.0) * scale);
        };
        for (auto& v : layer.weights) v = draw();
        for (auto& v : layer.bias) v = draw();
        w.layers.push_back(std::move(layer));
    }
    return w;
}

void write_weights(const std::filesystem::path& path, const ModelWeights& weights) {
    weights.validate();
    detail::ByteWriter out;
    out.magic("FSSW");
    out.u32(ModelWeights::format_version);
    const std::string meta =
        architecture_json(weights.architecture, weights.validation_symmetry_residual).dump();
    out.u32(static_cast<std::uint32_t>(meta.size()));
    out.raw(meta);
    out.u32(static_cast<std::uint32_t>(weights.layers.size()));
    for (const auto& l : weights.layers) {
        out.u32(kConv2d);
        out.u32(static_cast<std::uint32_t>(l.name.size()));
        out.raw(l.name);
        out.u32(static_cast<std::uint32_t>(l.out_channels));
        out.u32(static_cast<std::uint32_t>(l.in_channels));
        out.u32(static_cast<std::uint32_t>(l.kernel_h));
        out.u32(static_cast<std::uint32_t>(l.kernel_w));
        for (float v : l.weights) out.f32(v);
        for (float v : l.bias) out.f32(v);
    }
    out.save(path);
}

ModelWeights read_weights(const std::filesystem::path& path) {
    detail::ByteReader in(path);
    in.expect_magic("FSSW");
    const auto version = in.u32();
    if (version != ModelWeights::format_version) {
        throw InputError(in.name() + ": unsupported weights version " + std::to_string(version));
    }
    ModelWeights w;
    const auto meta_len = in.u32();
    try {
        const json meta = json::parse(in.raw(meta_len));
        auto& a = w.architecture;
        a.levels = meta.at("levels").get<std::size_t>();
        a.channels = meta.at("channels").get<std::vector<std::size_t>>();
        a.kernel = meta.at("kernel").get<std::size_t>();
        a.leaky_slope = meta.at("leaky_slope").get<double>();
        a.upsample = meta.at("upsample").get<std::string>();
        a.power_compression = meta.at("power_compression").get<std::string>();
        a.stream_output = meta.at("stream_output").get<std::string>();
        w.validation_symmetry_residual = meta.at("validation_symmetry_residual").get<double>();
        if (meta.contains("pad_multiple") &&
            meta.at("pad_multiple").get<std::size_t>() != a.pad_multiple()) {
            throw InputError("pad_multiple disagrees with the level count");
        }
    } catch (const json::exception& e) {
        throw InputError(in.name() + ": malformed weights metadata: " + e.what());
    }
    const auto count = in.u32();
    for (std::uint32_t n = 0; n < count; ++n) {
        ConvLayer l;
        if (in.u32() != kConv2d) throw InputError(in.name() + ": unknown layer kind");
        l.name = in.raw(in.u32());
        l.out_channels = in.u32();
        l.in_channels = in.u32();
        l.kernel_h = in.u32();
        l.kernel_w = in.u32();
        const std::size_t nw = l.out_channels * l.in_channels * l.kernel_h * l.kernel_w;
        if (nw * 4 > in.remaining()) throw InputError(in.name() + ": truncated file");
        l.weights.resize(nw);
        for (auto& v : l.weights) v = in.f32();
        l.bias.resize(l.out_channels);
        for (auto& v : l.bias) v = in.f32();
        w.layers.push_back(std::move(l));
    }
    if (in.remaining() != 0) throw InputError(in.name() + ": trailing bytes after layer records");
    w.validate();
    return w;
}

// ---------------------------------------------------------------------------

CompletionNetwork::CompletionNetwork(ModelWeights weights) : weights_(std::move(weights)) {
    weights_.validate();
    layers_per_unet_ = weights_.layers.size() / 3;
}

FeatureMap CompletionNetwork::run_unet(std::size_t stream, const FeatureMap& input) const {
    const auto& arch = weights_.architecture;
    const std::size_t m = arch.pad_multiple();
    if (stream > 2) throw InputError("stream index out of range");
    if (input.rows % m != 0 || input.cols % m != 0) {
        throw InputError("network input must be padded to a multiple of " + std::to_string(m));
    }
    const auto slope = static_cast<float>(arch.leaky_slope);
    std::size_t next = stream * layers_per_unet_;
    auto conv = [&](const FeatureMap& x, bool act) { return conv2d(x, weights_.layers[next++], act, slope); };

    std::vector<FeatureMap> skips;
    FeatureMap x = input;
    for (std::size_t e = 0; e < arch.levels; ++e) {
        x = conv(x, true);
        x = conv(x, true);
        skips.push_back(x);
        x = max_pool2(x);
    }
    x = conv(x, true);
    x = conv(x, true);
    for (std::size_t e = arch.levels; e-- > 0;) {
        x = upsample_concat(x, skips[e]);
        x = conv(x, true);
        x = conv(x, true);
    }
    return conv(x, false);
}

std::vector<Complex> CompletionNetwork::complete_plane(std::span<const Complex> plane,
                                                       std::size_t rows, std::size_t cols) const {
    if (plane.size() != rows * cols) throw InputError("plane size does not match its dimensions");
    const std::size_t m = weights_.architecture.pad_multiple();
    const std::size_t pr = round_up(rows, m), pc = round_up(cols, m);

    FeatureMap power(1, pr, pc), phase(1, pr, pc);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const Complex v = plane[i * cols + j];
            power.at(0, i, j) = static_cast<float>(std::log1p(std::norm(v)));
            phase.at(0, i, j) = static_cast<float>(std::arg(v));
        }
    }
    const FeatureMap magnitude = run_unet(0, power);
    const FeatureMap angle = run_unet(1, phase);

    FeatureMap euler(2, pr, pc);
    for (std::size_t i = 0; i < pr; ++i) {
        for (std::size_t j = 0; j < pc; ++j) {
            const float mag = magnitude.at(0, i, j);
            const float th = angle.at(0, i, j);
            euler.at(0, i, j) = mag * std::cos(th);
            euler.at(1, i, j) = mag * std::sin(th);
        }
    }
    const FeatureMap refined = run_unet(2, euler);

    std::vector<Complex> out(rows * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const float re = refined.at(0, i, j);
            const float im = refined.at(1, i, j);
            if (!std::isfinite(re) || !std::isfinite(im)) {
                throw std::runtime_error("completion network produced a non-finite activation");
            }
            out[i * cols + j] = Complex(re, im);
        }
    }
    return out;
}

Fss neural_complete(const Fss& fss_in, const CompletionNetwork& network) {
    Fss out(fss_in.rows(), fss_in.cols(), fss_in.channels(), fss_in.provenance());
    for (std::size_t c = 0; c < fss_in.channels(); ++c) {
        const auto completed = network.complete_plane(fss_in.plane(c), fss_in.rows(), fss_in.cols());
        std::copy(completed.begin(), completed.end(), out.plane(c).begin());
    }
    return out;
}

}  // namespace focalspec

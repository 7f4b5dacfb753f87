#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "focalspec/spectrum.hpp"

namespace focalspec {

/// Architecture constants shared with the training side. Stored in the
/// weights file so both ends build the same graph.
struct NetworkArchitecture {
    std::size_t levels = 4;
    std::vector<std::size_t> channels{32, 64, 128, 256};
    std::size_t kernel = 3;
    double leaky_slope = 0.2;
    std::string upsample = "nearest";
    std::string power_compression = "log1p_power";
    std::string stream_output = "magnitude_phase";

    /// Inputs are zero-padded to a multiple of 2^levels.
    std::size_t pad_multiple() const { return std::size_t{1} << levels; }
    void validate() const;
};

struct ConvLayer {
    std::string name;
    std::size_t out_channels = 0;
    std::size_t in_channels = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    /// [out][in][kh][kw]
    std::vector<float> weights;
    std::vector<float> bias;
};

/// Weights of the three sub-networks (power stream, phase stream, refinement),
/// in the fixed order produced by `layer_plan`.
struct ModelWeights {
    static constexpr std::uint32_t format_version = 1;

    NetworkArchitecture architecture;
    /// Symmetry residual of the trained model on its validation set.
    double validation_symmetry_residual = 0.0;
    std::vector<ConvLayer> layers;

    /// Checks layer count, that shapes chain, and that coefficients are finite.
    void validate() const;
};

/// Expected (name, out, in, k) of every conv layer for an architecture.
struct PlannedLayer {
    std::string name;
    std::size_t out_channels;
    std::size_t in_channels;
    std::size_t kernel;
};
std::vector<PlannedLayer> layer_plan(const NetworkArchitecture& arch);

/// Weights drawn uniformly from [-scale, scale] with a fixed seed. `scale = 0`
/// gives an all-zero model.
ModelWeights make_random_weights(const NetworkArchitecture& arch, std::uint64_t seed,
                                 double scale = 0.1);

ModelWeights read_weights(const std::filesystem::path& path);
void write_weights(const std::filesystem::path& path, const ModelWeights& weights);

/// Feature map [channel][row][col].
struct FeatureMap {
    std::size_t channels = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(std::size_t c, std::size_t r, std::size_t w)
        : channels(c), rows(r), cols(w), data(c * r * w, 0.0f) {}
    float& at(std::size_t c, std::size_t i, std::size_t j) { return data[(c * rows + i) * cols + j]; }
    float at(std::size_t c, std::size_t i, std::size_t j) const {
        return data[(c * rows + i) * cols + j];
    }
};

/// Dual-stream spectrum completion network. Immutable after construction and
/// safe to share across threads.
class CompletionNetwork {
public:
    explicit CompletionNetwork(ModelWeights weights);

    const ModelWeights& weights() const noexcept { return weights_; }

    /// Runs one U-Net (`stream` 0 power, 1 phase, 2 refinement) on an input
    /// whose sides are multiples of the pad granularity.
    FeatureMap run_unet(std::size_t stream, const FeatureMap& input) const;

    /// Completes one complex plane: power and phase streams, Euler
    /// combination m*cos(theta) + i*m*sin(theta), then refinement.
    std::vector<Complex> complete_plane(std::span<const Complex> plane, std::size_t rows,
                                        std::size_t cols) const;

private:
    ModelWeights weights_;
    std::size_t layers_per_unet_ = 0;
};

/// Network completion of every channel; output has the input's shape.
/// Throws std::runtime_error on non-finite activations.
Fss neural_complete(const Fss& fss_in, const CompletionNetwork& network);

}  // namespace focalspec

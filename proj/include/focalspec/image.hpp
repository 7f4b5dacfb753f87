#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace focalspec {

/// Interleaved H x W x C float image.
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, std::size_t channels, float fill = 0.0f)
        : height_(height), width_(width), channels_(channels),
          data_(height * width * channels, fill) {}

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }

    float& at(std::size_t y, std::size_t x, std::size_t c) {
        return data_[(y * width_ + x) * channels_ + c];
    }
    float at(std::size_t y, std::size_t x, std::size_t c) const {
        return data_[(y * width_ + x) * channels_ + c];
    }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::vector<float> data_;
};

}  // namespace focalspec

#pragma once

// Little-endian primitive encoding shared by the binary container formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "focalspec/error.hpp"

namespace focalspec::detail {

class ByteWriter {
public:
    void magic(const char (&tag)[5]) { bytes_.insert(bytes_.end(), tag, tag + 4); }

    void u32(std::uint32_t v) { put(v); }
    void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void raw(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InputError("cannot write " + path.string());
        out.write(reinterpret_cast<const char*>(bytes_.data()),
                  static_cast<std::streamsize>(bytes_.size()));
        if (!out) throw std::runtime_error("write failed for " + path.string());
    }

private:
    template <class U>
    void put(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::filesystem::path& path) : name_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InputError("cannot open " + name_);
        bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    void expect_magic(const char (&tag)[5]) {
        need(4);
        if (std::memcmp(bytes_.data() + pos_, tag, 4) != 0) {
            throw InputError(name_ + ": bad magic, expected " + std::string(tag, 4));
        }
        pos_ += 4;
    }

    std::uint32_t u32() { return get<std::uint32_t>(); }
    float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
    double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string raw(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    const std::string& name() const noexcept { return name_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw InputError(name_ + ": truncated file");
    }

    template <class U>
    U get() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }

    std::string name_;
    std::vector<std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace focalspec::detail

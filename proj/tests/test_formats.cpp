#include <gtest/gtest.h>

#include <filesystem>
#include <cstring>
#include <fstream>

#include "focalspec/error.hpp"
#include "focalspec/formats.hpp"
#include "oracles.hpp"

using namespace focalspec;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / ("focalspec_" + name); }

std::vector<std::uint8_t> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Fstk, RoundTripAndHeader) {
    FocalStack s(3, 2, 4, 2, -1.0, 0.01);
    for (std::size_t i = 0; i < s.data().size(); ++i) s.data()[i] = static_cast<float>(i) * 0.5f;
    const auto path = tmp("a.fstk");
    write_fstk(path, s);
    const auto bytes = slurp(path);
    ASSERT_EQ(bytes.size(), 4 + 5 * 4 + 16 + s.data().size() * 4);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FSTK");
    EXPECT_EQ(bytes[4], 1);   // version, little-endian
    EXPECT_EQ(bytes[8], 3);   // N_C
    EXPECT_EQ(bytes[12], 2);  // H
    // first sample (layer 0, y 0, x 0, c 1) = 0.5f = 0x3f000000
    const std::size_t data0 = 4 + 20 + 16;
    EXPECT_EQ(bytes[data0 + 4 + 3], 0x3f);
    const auto back = read_fstk(path);
    EXPECT_EQ(back.num_layers(), 3u);
    EXPECT_EQ(back.channels(), 2u);
    EXPECT_DOUBLE_EQ(back.d_min(), -1.0);
    EXPECT_DOUBLE_EQ(back.delta_alpha(), 0.01);
    EXPECT_TRUE(std::equal(s.data().begin(), s.data().end(), back.data().begin()));
}

TEST(Fstk, CorruptFiles) {
    const auto path = tmp("bad.fstk");
    { std::ofstream(path) << "FSTX"; }
    EXPECT_THROW(read_fstk(path), InputError);
    FocalStack s(2, 1, 2, 1, 0.0, 0.1);
    write_fstk(path, s);
    fs::resize_file(path, fs::file_size(path) - 2);
    EXPECT_THROW(read_fstk(path), InputError);
    EXPECT_THROW(read_fstk(tmp("does_not_exist.fstk")), InputError);
}

TEST(Fssp, RoundTripAndLayout) {
    std::vector<Fss> rows;
    for (std::size_t y = 0; y < 3; ++y) {
        Fss f(4, 5, 2, {0.01, -1.0, 9, 4, 15.0});
        for (std::size_t i = 0; i < f.data().size(); ++i) {
            f.data()[i] = Complex(static_cast<double>(y * 100 + i), -static_cast<double>(i));
        }
        rows.push_back(f);
    }
    const auto path = tmp("a.fssp");
    write_fssp(path, rows);
    write_provenance(path, rows[0].provenance());
    const auto bytes = encode_fssp(rows);
    EXPECT_EQ(slurp(path), bytes);
    ASSERT_EQ(bytes.size(), 4 + 20 + 16 + 4 + 4 * 3 * 5 * 2 * 8);
    // payload order [omega_f][y][omega_x][c]: the second complex value is
    // row y=0, bin (0, 0), channel 1
    const std::size_t data0 = 44;
    float re1;
    std::memcpy(&re1, &bytes[data0 + 8], 4);
    EXPECT_EQ(re1, static_cast<float>(rows[0].at(1, 0, 0).real()));
    float re_y1;
    std::memcpy(&re_y1, &bytes[data0 + 5 * 2 * 8], 4);
    EXPECT_EQ(re_y1, static_cast<float>(rows[1].at(0, 0, 0).real()));

    const auto back = read_fssp(path);
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[0].provenance().num_views, 9u);
    EXPECT_DOUBLE_EQ(back[0].provenance().baseline_unit, 15.0);
    EXPECT_DOUBLE_EQ(back[0].provenance().delta_alpha, 0.01);
    for (std::size_t y = 0; y < 3; ++y) {
        for (std::size_t i = 0; i < rows[y].data().size(); ++i) EXPECT_EQ(back[y].data()[i], rows[y].data()[i]);
    }
}

TEST(Fssp, ShapeMismatchAndMissingSidecar) {
    std::vector<Fss> rows{Fss(4, 5, 1), Fss(4, 6, 1)};
    EXPECT_THROW(encode_fssp(rows), InputError);
    EXPECT_THROW(encode_fssp({}), InputError);
    EXPECT_FALSE(read_provenance(tmp("nowhere.fssp")).has_value());
}

#include <gtest/gtest.h>

#include "focalspec/error.hpp"
#include "focalspec/metrics.hpp"
#include "oracles.hpp"

using namespace focalspec;

namespace {

Image random_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
    Image img(h, w, c);
    const auto v = oracle::random_plane(img.size(), seed);
    std::copy(v.begin(), v.end(), img.data().begin());
    return img;
}

FocalStack random_stack(std::size_t layers, std::uint64_t seed) {
    FocalStack s(layers, 9, 10, 1, -0.1, 0.05);
    const auto v = oracle::random_plane(s.data().size(), seed);
    std::copy(v.begin(), v.end(), s.data().begin());
    return s;
}

Image permute_channels(const Image& a) {
    Image out(a.height(), a.width(), a.channels());
    for (std::size_t y = 0; y < a.height(); ++y) {
        for (std::size_t x = 0; x < a.width(); ++x) {
            for (std::size_t c = 0; c < a.channels(); ++c) out.at(y, x, c) = a.at(y, x, a.channels() - 1 - c);
        }
    }
    return out;
}

}  // namespace

TEST(Psnr, IdenticalIsInfinite) {
    const auto a = random_image(8, 8, 1, 1);
    const auto p = psnr(a, a);
    EXPECT_TRUE(p.infinite);
    EXPECT_EQ(p.str(), "inf");
}

TEST(Psnr, KnownValues) {
    Image a(10, 10, 1, 0.3f), b(10, 10, 1, 0.4f);
    EXPECT_NEAR(psnr(a, b).db, 20.0, 1e-5);
    EXPECT_NEAR(psnr(Image(4, 4, 1, 0.0f), Image(4, 4, 1, 1.0f)).db, 0.0, 1e-12);
}

TEST(Psnr, SymmetricAndChannelPermutationInvariant) {
    const auto a = random_image(9, 11, 3, 2), b = random_image(9, 11, 3, 3);
    EXPECT_DOUBLE_EQ(psnr(a, b).db, psnr(b, a).db);
    EXPECT_NEAR(psnr(a, b).db, psnr(permute_channels(a), permute_channels(b)).db, 1e-12);
    EXPECT_THROW(psnr(a, Image(9, 11, 1)), InputError);
}

TEST(Ssim, IdenticalAndConstant) {
    const auto a = random_image(16, 12, 2, 4);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
    EXPECT_NEAR(ssim(Image(8, 8, 1, 0.6f), Image(8, 8, 1, 0.6f)), 1.0, 1e-12);
}

TEST(Ssim, InvertedBinaryPatternIsDissimilar) {
    Image a(16, 16, 1), b(16, 16, 1);
    for (std::size_t y = 0; y < 16; ++y) {
        for (std::size_t x = 0; x < 16; ++x) {
            a.at(y, x, 0) = static_cast<float>((x / 2 + y / 3) % 2);
            b.at(y, x, 0) = 1.0f - a.at(y, x, 0);
        }
    }
    const double s = ssim(a, b);
    EXPECT_LT(s, 0.5);
    EXPECT_GE(s, -1.0);
}

TEST(Ssim, MatchesDirectWindowEvaluation) {
    const auto a = random_image(10, 11, 1, 5), b = random_image(10, 11, 1, 6);
    const double c1 = 0.0001, c2 = 0.0009;
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i + 8 <= 10; ++i) {
        for (std::size_t j = 0; j + 8 <= 11; ++j) {
            double mx = 0, my = 0;
            for (std::size_t p = 0; p < 8; ++p)
                for (std::size_t q = 0; q < 8; ++q) {
                    mx += a.at(i + p, j + q, 0);
                    my += b.at(i + p, j + q, 0);
                }
            mx /= 64;
            my /= 64;
            double vx = 0, vy = 0, cxy = 0;
            for (std::size_t p = 0; p < 8; ++p)
                for (std::size_t q = 0; q < 8; ++q) {
                    const double dx = a.at(i + p, j + q, 0) - mx, dy = b.at(i + p, j + q, 0) - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cxy += dx * dy;
                }
            vx /= 64;
            vy /= 64;
            cxy /= 64;
            sum += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++n;
        }
    }
    EXPECT_NEAR(ssim(a, b), sum / static_cast<double>(n), 1e-9);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
}

TEST(Ssim, TooSmallOrMismatched) {
    EXPECT_THROW(ssim(Image(7, 9, 1), Image(7, 9, 1)), InputError);
    EXPECT_THROW(ssim(Image(9, 9, 1), Image(9, 9, 2)), InputError);
}

TEST(EnergyLoss, Values) {
    Fss gt(5, 6, 1);
    for (std::size_t i = 0; i < gt.data().size(); ++i) gt.data()[i] = Complex(static_cast<double>(i), 1.0);
    EXPECT_EQ(spectral_energy_loss(gt, gt), 0.0);
    Fss scaled = gt;
    for (auto& v : scaled.data()) v *= 0.99;
    EXPECT_NEAR(spectral_energy_loss(gt, scaled), 1 - 0.99 * 0.99, 1e-12);
    EXPECT_NEAR(spectral_energy_loss(gt, Fss(5, 6, 1)), 1.0, 1e-15);
    Fss rotated = gt;
    for (auto& v : rotated.data()) v *= std::polar(1.0, 0.7);
    EXPECT_NEAR(spectral_energy_loss(gt, rotated), 0.0, 1e-12);
    EXPECT_THROW(spectral_energy_loss(Fss(5, 6, 1), gt), InputError);
    EXPECT_THROW(spectral_energy_loss(gt, Fss(6, 5, 1)), InputError);
}

TEST(Report, IdenticalStacks) {
    const auto s = random_stack(4, 7);
    const auto r = evaluate_stack(s, s);
    ASSERT_EQ(r.layers.size(), 4u);
    for (const auto& l : r.layers) {
        EXPECT_TRUE(l.psnr.infinite);
        EXPECT_NEAR(l.ssim, 1.0, 1e-12);
    }
    EXPECT_FALSE(r.mean_psnr.has_value());
    const auto rel = relative_metrics(r, r);
    for (const auto& l : rel.layers) {
        EXPECT_EQ(*l.rel_psnr, 0.0);
        EXPECT_EQ(*l.rel_ssim, 0.0);
    }
}

TEST(Report, OffsetStackIsTwentyDb) {
    const auto gt = random_stack(3, 8);
    FocalStack out = gt;
    for (auto& v : out.data()) v += 0.1f;
    const auto r = evaluate_stack(out, gt);
    for (const auto& l : r.layers) EXPECT_NEAR(l.psnr.db, 20.0, 1e-4);
    EXPECT_NEAR(*r.mean_psnr, 20.0, 1e-4);
    EXPECT_NEAR(r.layers[2].f, 0.0, 1e-12);
}

TEST(Report, ConstructedImprovement) {
    const auto gt = random_stack(5, 9);
    FocalStack in = gt, out = gt;
    // MSE 0.04 -> 0.02 per pixel is exactly 10*log10(2) dB; scale to 3 dB via amplitude
    const double a = 0.2, b = a / std::sqrt(std::pow(10.0, 0.3));
    for (std::size_t i = 0; i < gt.data().size(); ++i) {
        in.data()[i] = static_cast<float>(gt.data()[i] + a);
        out.data()[i] = static_cast<float>(gt.data()[i] + b);
    }
    const auto rel = relative_metrics(evaluate_stack(out, gt), evaluate_stack(in, gt));
    for (const auto& l : rel.layers) EXPECT_NEAR(*l.rel_psnr, 3.0, 1e-4);
    EXPECT_NEAR(*rel.mean_rel_psnr, 3.0, 1e-4);
}

TEST(Report, OneSidedInfinityLeavesAGap) {
    const auto gt = random_stack(2, 10);
    FocalStack in = gt;
    in.data()[0] += 0.5f;
    const auto rel = relative_metrics(evaluate_stack(gt, gt), evaluate_stack(in, gt));
    EXPECT_FALSE(rel.layers[0].rel_psnr.has_value());
    EXPECT_EQ(*rel.layers[1].rel_psnr, 0.0);
    const auto csv = report_csv(rel);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "layer,f,psnr_db,ssim,rel_psnr_db,rel_ssim");
    EXPECT_NE(csv.find("0,-0.100000,inf,1.000000,,"), std::string::npos);
}

TEST(Report, Mismatches) {
    const auto a = random_stack(3, 11), b = random_stack(4, 12);
    EXPECT_THROW(evaluate_stack(a, b), InputError);
    EXPECT_THROW(relative_metrics(evaluate_stack(a, a), evaluate_stack(b, b)), InputError);
    FocalStack shifted(3, 9, 10, 1, 0.0, 0.05);
    EXPECT_THROW(evaluate_stack(a, shifted), InputError);
}

TEST(Report, ThreadCountDoesNotMatter) {
    const auto a = random_stack(6, 13), b = random_stack(6, 14);
    EXPECT_EQ(report_csv(evaluate_stack(a, b, {}, 1)), report_csv(evaluate_stack(a, b, {}, 3)));
    const auto json = report_json(evaluate_stack(a, b));
    EXPECT_NE(json.find("\"mean_psnr_db\""), std::string::npos);
}

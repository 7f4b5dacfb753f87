#include <gtest/gtest.h>

#include "focalspec/antialias.hpp"
#include "focalspec/cone_geometry.hpp"
#include "focalspec/error.hpp"
#include "focalspec/metrics.hpp"
#include "oracles.hpp"

using namespace focalspec;

namespace {

double rms_diff(std::span<const float> a, std::span<const float> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(static_cast<double>(a[i]) - b[i], 2);
    return std::sqrt(s / static_cast<double>(a.size()));
}

/// Dense 121-view textured scene with every primitive at zero disparity.
LightField3D flat_scene(std::size_t views, std::size_t height) {
    SyntheticSceneSpec spec;
    spec.width = 96;
    spec.height = height;
    spec.num_views = views;
    spec.u_ref = views / 2;
    Primitive p;
    p.kind = PrimitiveKind::textured_plane;
    p.x = 0;
    p.x_end = 96;
    p.disparity = 0.0;
    p.intensity = 0.5;
    p.texel_size = 3;
    p.seed = 4;
    spec.primitives = {p};
    return render_synthetic(spec);
}

Epi random_epi(std::size_t n, std::size_t w, std::uint64_t seed) {
    Epi epi(n, w, 1, n / 2);
    const auto v = oracle::random_plane(epi.data().size(), seed);
    std::copy(v.begin(), v.end(), epi.data().begin());
    return epi;
}

std::shared_ptr<const CompletionNetwork> small_net(double scale) {
    NetworkArchitecture a;
    a.levels = 2;
    a.channels = {4, 8};
    return std::make_shared<const CompletionNetwork>(make_random_weights(a, 3, scale));
}

}  // namespace

TEST(Placements, NearestViewWithTiesTowardReference) {
    Epi epi(3, 4, 1, 1);
    const auto p = replicated_placements(epi, 2);
    ASSERT_EQ(p.size(), 7u);
    const std::size_t src[] = {0, 0, 1, 1, 1, 2, 2};
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(p[i].source, src[i]) << i;
        EXPECT_NEAR(p[i].offset, -1.0 + static_cast<double>(i) / 3.0, 1e-12);
    }
    const auto q = replicated_placements(epi, 1);
    ASSERT_EQ(q.size(), 5u);
    EXPECT_EQ(q[1].source, 1u);
    EXPECT_EQ(q[3].source, 1u);
    Epi off(3, 4, 1, 0);
    EXPECT_EQ(replicated_placements(off, 1)[3].source, 1u);
}

TEST(Analytic, NoInsertionIsPlainRefocus) {
    const auto epi = random_epi(5, 20, 1);
    const RefocusConfig cfg;
    const auto a = analytic_complete(epi, cfg, 0), b = build_focal_stack(epi, cfg);
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST(Analytic, ZeroDisparitySceneMatchesDenseStack) {
    const auto dense = flat_scene(121, 1);
    const auto sparse = downsample_views(dense, 15);
    const RefocusConfig cfg;
    const auto gt = build_focal_stack(extract_epi(dense, 0), cfg);
    const auto out = analytic_complete(extract_epi(sparse, 0), cfg, 14);
    EXPECT_LE(rms_diff(out.data(), gt.data()), 1e-4);
    const auto slice = antialias_slice(extract_epi(sparse, 0), cfg, AnalyticReplicate{14});
    EXPECT_LE(rms_diff(slice.stack.data(), gt.data()), 1e-3);
    EXPECT_FALSE(slice.diagnostics.symmetry_warning);
    EXPECT_LE(slice.diagnostics.symmetry_residual, 1e-6);
}

TEST(Analytic, LineCountRisesAndEnergyFollows) {
    const auto model = ConeModel::make(0.01, 9, 4);
    const auto dense_model = model.with_inserted_views(14);
    EXPECT_EQ(predict_spectral_lines(model, 199, 64).size(), 9u);
    EXPECT_EQ(predict_spectral_lines(dense_model, 199, 64).size(), 9u + 8u * 14u);
    const auto epi = oracle::point_epi(9, 64, 4, 1.0, 32.3, 0.5);
    const auto fss = fss_forward(analytic_complete(epi, RefocusConfig{}, 14));
    EXPECT_GE(*energy_concentration(fss, line_mask(dense_model, 199, 64)), 0.9);
}

TEST(Analytic, PointSpreadIsVShaped) {
    // spatial variance minus the linear-interpolation footprint p(1-p), which
    // depends only on the fractional shift of each placement at that layer
    for (const double d : {-0.6, -0.1, 0.3, 0.5}) {
        const auto epi = oracle::point_epi(9, 128, 4, 1.0, 64.3, d);
        RefocusConfig cfg;
        cfg.boundary = BoundaryPolicy::zero;
        const auto st = analytic_complete(epi, cfg, 14);
        const auto placements = replicated_placements(epi, 14);
        std::vector<double> width(st.num_layers());
        for (std::size_t k = 0; k < st.num_layers(); ++k) {
            double m0 = 0, m1 = 0, m2 = 0;
            for (std::size_t x = 0; x < 128; ++x) {
                const double v = st.at(k, 0, x, 0), xd = static_cast<double>(x);
                m0 += v;
                m1 += v * xd;
                m2 += v * xd * xd;
            }
            double footprint = 0;
            for (const auto& pl : placements) {
                const double s = st.focal_value(k) * pl.offset;
                const double q = s - std::floor(s);
                footprint += q * (1 - q);
            }
            footprint /= static_cast<double>(placements.size());
            width[k] = m2 / m0 - (m1 / m0) * (m1 / m0) - footprint;
        }
        const auto kmin = static_cast<std::size_t>(std::min_element(width.begin(), width.end()) - width.begin());
        EXPECT_NEAR(st.focal_value(kmin), d, 0.01 + 1e-9) << d;
        std::size_t ok = 0;
        for (std::size_t k = 0; k < width.size(); ++k) {
            if (k == kmin) {
                ++ok;
            } else if (k < kmin) {
                ok += width[k] >= width[k + 1];
            } else {
                ok += width[k] >= width[k - 1];
            }
        }
        EXPECT_GE(ok, width.size() * 9 / 10) << d;
    }
}

TEST(Lowpass, FullCutoffIsIdentityFilter) {
    const auto epi = random_epi(7, 33, 2);
    const RefocusConfig cfg;
    const auto a = epi_lowpass_refocus(epi, cfg, 1.0), b = build_focal_stack(epi, cfg);
    for (std::size_t i = 0; i < a.data().size(); ++i) ASSERT_NEAR(a.data()[i], b.data()[i], 1e-5);
}

TEST(Lowpass, ConstantEpiUnchanged) {
    Epi epi(5, 16, 1, 2);
    std::fill(epi.data().begin(), epi.data().end(), 0.6f);
    const auto st = epi_lowpass_refocus(epi, RefocusConfig{}, 0.3);
    for (float v : st.data()) ASSERT_NEAR(v, 0.6f, 1e-5);
}

TEST(Lowpass, OverSmoothsTheFocusedPoint) {
    const double d = 0.3;
    const auto epi = oracle::point_epi(9, 64, 4, 1.0, 32.0, d);
    const RefocusConfig cfg;
    const std::size_t k = 130;  // f = 0.3
    ASSERT_NEAR(cfg.focal_axis()[k], d, 1e-12);
    const auto sharp = build_focal_stack(epi, cfg), soft = epi_lowpass_refocus(epi, cfg, 0.2);
    float peak_sharp = 0, peak_soft = 0;
    for (std::size_t x = 0; x < 64; ++x) {
        peak_sharp = std::max(peak_sharp, sharp.at(k, 0, x, 0));
        peak_soft = std::max(peak_soft, soft.at(k, 0, x, 0));
    }
    EXPECT_LT(peak_soft, peak_sharp);
}

TEST(Lowpass, BadCutoff) {
    const auto epi = random_epi(3, 8, 3);
    EXPECT_THROW(epi_lowpass_refocus(epi, RefocusConfig{}, 0.0), InputError);
    EXPECT_THROW(antialias_slice(epi, RefocusConfig{}, EpiLowpass{1.5}), InputError);
}

TEST(Neural, DcBlockRestoredExactly) {
    const auto epi = random_epi(5, 24, 4);
    const auto cfg = RefocusConfig::with_layers(-0.5, 0.05, 21);
    const auto input = fss_forward(build_focal_stack(epi, cfg));
    const auto out = completed_spectrum(epi, cfg, NeuralCompletion{small_net(0.1), 5});
    for (std::size_t i = input.dc_row() - 2; i <= input.dc_row() + 2; ++i) {
        for (std::size_t j = input.dc_col() - 2; j <= input.dc_col() + 2; ++j) {
            EXPECT_EQ(out.at(0, i, j), input.at(0, i, j));
        }
    }
}

TEST(Neural, ZeroModelKeepsOnlyTheDcBlock) {
    const auto epi = random_epi(5, 24, 5);
    const auto cfg = RefocusConfig::with_layers(-0.5, 0.05, 21);
    const auto out = completed_spectrum(epi, cfg, NeuralCompletion{small_net(0.0), 5});
    std::size_t nonzero = 0;
    for (const auto& v : out.data()) nonzero += v != Complex(0.0);
    EXPECT_LE(nonzero, 25u);
    const auto slice = antialias_slice(epi, cfg, NeuralCompletion{small_net(0.0), 5});
    EXPECT_EQ(slice.stack.num_layers(), 21u);
    for (float v : slice.stack.data()) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(Neural, MissingNetworkRejected) {
    const auto epi = random_epi(3, 8, 6);
    EXPECT_THROW(antialias_slice(epi, RefocusConfig{}, NeuralCompletion{}), InputError);
}

TEST(Pipeline, AnalyticWithoutInsertionIsIdentity) {
    const auto epi = random_epi(5, 30, 7);
    const RefocusConfig cfg;
    const auto stack = build_focal_stack(epi, cfg);
    const auto out = antialias_slice(epi, cfg, AnalyticReplicate{0});
    for (std::size_t i = 0; i < stack.data().size(); ++i) ASSERT_NEAR(out.stack.data()[i], stack.data()[i], 1e-5);
}

TEST(LightField, SingleRowEqualsSlice) {
    const auto lf = flat_scene(9, 1);
    const RefocusConfig cfg;
    const auto a = antialias_lightfield(lf, cfg, AnalyticReplicate{3});
    const auto b = antialias_slice(extract_epi(lf, 0), cfg, AnalyticReplicate{3});
    EXPECT_TRUE(std::equal(a.stack.data().begin(), a.stack.data().end(), b.stack.data().begin()));
}

TEST(LightField, ThreadsAndRowRanges) {
    const auto lf = flat_scene(9, 6);
    const auto cfg = RefocusConfig::with_layers(-0.5, 0.05, 21);
    const auto one = antialias_lightfield(lf, cfg, EpiLowpass{0.5}, std::nullopt, 1);
    const auto three = antialias_lightfield(lf, cfg, EpiLowpass{0.5}, std::nullopt, 3);
    EXPECT_TRUE(std::equal(one.stack.data().begin(), one.stack.data().end(), three.stack.data().begin()));
    const auto part = antialias_lightfield(lf, cfg, EpiLowpass{0.5}, RowRange{2, 4}, 2);
    EXPECT_EQ(part.stack.height(), 2u);
    EXPECT_EQ(part.first_row, 2u);
    const auto r3 = part.stack.row(1), full3 = one.stack.row(3);
    EXPECT_TRUE(std::equal(r3.data().begin(), r3.data().end(), full3.data().begin()));
    EXPECT_THROW(antialias_lightfield(lf, cfg, EpiLowpass{0.5}, RowRange{4, 9}), InputError);
    EXPECT_THROW(antialias_lightfield(lf, cfg, EpiLowpass{0.5}, RowRange{3, 3}), InputError);
}

TEST(LightField, MixedSceneImprovesPsnr) {
    SyntheticSceneSpec spec;
    spec.width = 128;
    spec.height = 8;
    spec.num_views = 121;
    spec.u_ref = 60;
    Primitive bg;
    bg.kind = PrimitiveKind::textured_plane;
    bg.x = 0;
    bg.x_end = 128;
    bg.intensity = 0.5;
    bg.texture_contrast = 0.8;
    bg.texel_size = 4;
    bg.seed = 1;
    Primitive fg = bg;
    fg.x = 40;
    fg.x_end = 80;
    fg.disparity = 0.4;
    fg.seed = 2;
    Primitive pt;
    pt.x = 100.5;
    pt.disparity = -0.3;
    spec.primitives = {bg, fg, pt};
    const auto dense = render_synthetic(spec);
    const auto sparse = downsample_views(dense, 15);
    const RefocusConfig cfg;
    const auto gt = build_focal_stack(dense, cfg);
    const auto in = build_focal_stack(sparse, cfg);
    const auto out = antialias_lightfield(sparse, cfg, AnalyticReplicate{14}).stack;
    const auto rel = relative_metrics(evaluate_stack(out, gt), evaluate_stack(in, gt));
    EXPECT_GE(*rel.mean_rel_psnr, 1.0);
}

namespace {

LightField4D point_4d(double d) {
    LightField4D lf(5, 5, 16, 16, 1, 2, 2);
    for (std::size_t v = 0; v < 5; ++v) {
        for (std::size_t u = 0; u < 5; ++u) {
            const double px = 8.0 - d * lf.u_offset(u), py = 7.0 - d * lf.v_offset(v);
            lf.at(v, u, static_cast<std::size_t>(py), static_cast<std::size_t>(px), 0) = 1.0f;
        }
    }
    return lf;
}

}  // namespace

TEST(FourD, SingleViewRowReducesToThreeD) {
    const auto lf4 = [] {
        LightField4D lf(1, 5, 3, 12, 1, 0, 2);
        const auto v = oracle::random_plane(lf.data().size(), 8);
        std::copy(v.begin(), v.end(), lf.data().begin());
        return lf;
    }();
    const auto cfg = RefocusConfig::with_layers(-0.5, 0.1, 11);
    const auto a = antialias_4d(lf4, cfg, AnalyticReplicate{2});
    const auto b = antialias_lightfield(lf4.horizontal(0), cfg, AnalyticReplicate{2}).stack;
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST(FourD, ConstantStaysConstant) {
    LightField4D lf(3, 3, 8, 8, 1, 1, 1);
    std::fill(lf.data().begin(), lf.data().end(), 0.4f);
    const auto out = antialias_4d(lf, RefocusConfig::with_layers(-0.5, 0.1, 11), AnalyticReplicate{2});
    for (float v : out.data()) ASSERT_NEAR(v, 0.4f, 1e-5);
}

TEST(FourD, ZeroDisparityPointIsSharpAtItsLayer) {
    const auto lf = point_4d(0.0);
    const auto cfg = RefocusConfig::with_layers(-0.5, 0.1, 11);
    const auto out = antialias_4d(lf, cfg, AnalyticReplicate{3}, 2);
    const std::size_t k = 5;  // f = 0
    ASSERT_NEAR(out.focal_value(k), 0.0, 1e-12);
    std::size_t lit = 0;
    for (std::size_t y = 0; y < 16; ++y) {
        for (std::size_t x = 0; x < 16; ++x) {
            if (out.at(k, y, x, 0) > 1e-3) {
                ++lit;
                EXPECT_LE(std::abs(static_cast<long>(x) - 8), 1);
                EXPECT_LE(std::abs(static_cast<long>(y) - 7), 1);
            }
        }
    }
    EXPECT_GE(lit, 1u);
    EXPECT_NEAR(out.at(k, 7, 8, 0), 1.0, 1e-4);
}

#include "test_util.hpp"

#include <cwdm/metrics.hpp>
#include <cwdm/rxdsp.hpp>

#include <gtest/gtest.h>

using namespace cwdm;
using namespace cwdm::testing;

namespace {

WssFilterModel nominal_wss() { return {0, 50e9, 7e9}; }

NodeConfig add_drop(const WssFilterModel& m, bool express = true) {
    NodeConfig node;
    node.mode = NodeMode::AddDrop;
    node.drop_filter = m;
    node.band_center_hz = 193.075e12;
    node.drop_filter.center_hz = 25e9;
    node.express_enabled = express;
    return node;
}

DualPolWaveform tone_pair(double f_hz) {
    const auto t = tone(1 << 14, 320e9, f_hz);
    return {t, t};
}

} // namespace

TEST(WssResponse, FlatTopCentre) {
    const auto h = wss_response(nominal_wss());
    EXPECT_NEAR(std::abs(h(0.0)), 1.0, 1e-3);
    const auto narrow = wss_response(WssFilterModel{});
    EXPECT_NEAR(std::abs(narrow(0.0)), 1.0, 1e-3);
}

TEST(WssResponse, HalfPowerAtHalfBandwidth) {
    for (const auto& m : {nominal_wss(), WssFilterModel{}, WssFilterModel{10e9, 40e9, 12e9}}) {
        const auto h = wss_response(m);
        EXPECT_NEAR(std::norm(h(m.center_hz + m.bandwidth_3db_hz / 2)), 0.5, 0.01);
        EXPECT_NEAR(std::norm(h(m.center_hz - m.bandwidth_3db_hz / 2)), 0.5, 0.01);
    }
}

TEST(WssResponse, CascadeNarrows) {
    const auto m = nominal_wss();
    EXPECT_NEAR(cascade_bandwidth_3db_hz(m, 1), 50e9, 1e6);
    const double b4 = cascade_bandwidth_3db_hz(m, 4);
    EXPECT_LT(b4, 50e9);
    EXPECT_GT(b4, 40e9);
    EXPECT_NEAR(std::pow(m.amplitude(b4 / 2), 8), 0.5, 1e-6);
    EXPECT_LT(cascade_bandwidth_3db_hz(m, 8), b4);
}

TEST(WssResponse, RejectsInvalidModel) {
    EXPECT_THROW(wss_response(WssFilterModel{0, -1, 7e9}), ParameterError);
    EXPECT_THROW(wss_response(WssFilterModel{0, 50e9, 0}), ParameterError);
}

TEST(ApplyNode, AllPassIsBitExact) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 1, 2048, 256);
    NodeConfig node;
    const auto out = apply_node(b.optical, node);
    EXPECT_TRUE(out.x.samples == b.optical.x.samples);
    EXPECT_TRUE(out.y.samples == b.optical.y.samples);
}

TEST(ApplyNode, ToneAtTargetPassesDropPath) {
    for (bool express : {false, true}) {
        const auto out = apply_node(tone_pair(25e9), add_drop(nominal_wss(), express));
        EXPECT_LE(std::abs(db(out.x.mean_power())), 0.05) << "express " << express;
    }
}

TEST(ApplyNode, ToneAtSlotEdgeDropIsHalfPower) {
    const auto node = add_drop(nominal_wss(), false);
    const auto centre = apply_node(tone_pair(25e9), node);
    const auto edge = apply_node(tone_pair(50e9), node);
    EXPECT_NEAR(db(edge.x.mean_power() / centre.x.mean_power()), -3.01, 0.1);
}

TEST(ApplyNode, ExpressPathIsPowerComplementary) {
    const auto node = add_drop(WssFilterModel{});
    const auto h = node_response(node);
    const auto hd = wss_response(node.drop_filter);
    for (double f : {-75e9, 0.0, 3e9, 25e9, 47e9, 75e9}) {
        const double d = std::abs(hd(f));
        const double e = std::sqrt(1 - d * d);
        const auto expected = d + e * std::polar(1.0, -2 * std::numbers::pi * f * node.express_delay_s);
        EXPECT_NEAR(std::abs(h(f) - expected), 0.0, 1e-12);
    }
    EXPECT_NEAR(std::abs(h(-75e9)), 1.0, 1e-6);
}

TEST(ApplyNode, RejectsOffGridTarget) {
    auto node = add_drop(nominal_wss());
    node.drop_filter.center_hz = 30e9;
    EXPECT_THROW(node.validate(), ParameterError);
    EXPECT_THROW(apply_node(tone_pair(0), node), ParameterError);
}

TEST(ApplySpan, ZeroLengthIsIdentity) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 2, 2048, 256);
    SpanConfig span;
    span.length_m = 0;
    const auto out = apply_span(b.optical, span);
    EXPECT_TRUE(out.x.samples == b.optical.x.samples);
}

TEST(ApplySpan, CompensationRoundTrip) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 3, 1 << 13, 512);
    const SpanConfig span;
    const auto back = compensate_dispersion_full(apply_span(b.optical, span), span, 1);
    EXPECT_LE(rms_relative_error(back.x.samples, b.optical.x.samples), 1e-6);
    EXPECT_LE(rms_relative_error(back.y.samples, b.optical.y.samples), 1e-6);
    const auto ola = compensate_dispersion(apply_span(b.optical, span), span, 1);
    EXPECT_LE(rms_relative_error(ola.x.samples, b.optical.x.samples), 1e-6);
}

TEST(ApplySpan, GroupDelaySpreadAcrossSlot) {
    const SpanConfig span;  // 80 km x 17 ps/nm/km = 1360 ps/nm
    EXPECT_NEAR(span.accumulated_dispersion_s_per_m() * 1e12 * 1e-9, 1360.0, 1e-9);
    const double dlambda = span.reference_lambda_m * span.reference_lambda_m * 50e9 / kSpeedOfLight;
    EXPECT_NEAR(dlambda * 1e9, 0.402, 0.001);
    const double spread = span_group_delay_s(span, 25e9) - span_group_delay_s(span, -25e9);
    EXPECT_NEAR(spread * 1e12, 547.0, 1.0);
    EXPECT_NEAR(spread * 40e9, 22.0, 0.5);
    // Numerical derivative of the applied phase.
    const auto h = dispersion_response(span, 1.0);
    const double df = 1e6;
    const double f = 10e9;
    const double dphi = std::arg(h(f + df) / h(f - df));
    EXPECT_NEAR(-dphi / (2 * std::numbers::pi * 2 * df), span_group_delay_s(span, f), 1e-15);
}

TEST(LoadNoise, InfiniteTargetIsIdentity) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 4, 2048, 256);
    RandomStream rs(1, "noise");
    const auto out = load_noise(b.optical, std::numeric_limits<double>::infinity(), 25e9, 50e9, rs);
    EXPECT_TRUE(out.x.samples == b.optical.x.samples);
    EXPECT_TRUE(out.y.samples == b.optical.y.samples);
}

TEST(LoadNoise, MeasuredOsnrMatchesTarget) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 5, 1 << 14);
    for (double target : {12.0, 20.0}) {
        RandomStream rs(7, "noise", static_cast<std::uint64_t>(target));
        const auto noisy = load_noise(b.optical, target, 25e9, 50e9, rs);
        EXPECT_NEAR(measure_osnr_db(noisy, 25e9, 50e9, 110e9, 150e9, 100e6), target, 0.1);
    }
}

TEST(LoadNoise, ReferenceBandwidthScaling) {
    const auto b = standard_band(40e9, Shaping::Cyclic, 6, 1 << 14);
    RandomStream rs(8, "noise");
    const auto noisy = load_noise(b.optical, 20.0, -25e9, 50e9, rs);
    const double full = measure_osnr_db(noisy, -25e9, 50e9, 110e9, 150e9, 100e6, 12.5e9);
    const double half = measure_osnr_db(noisy, -25e9, 50e9, 110e9, 150e9, 100e6, 6.25e9);
    EXPECT_NEAR(half - full, 3.0103, 1e-3);
    EXPECT_NEAR(full, 20.0, 0.1);
}

TEST(LoadNoise, RejectsNaNTarget) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 4, 2048, 256);
    RandomStream rs(1, "noise");
    EXPECT_THROW(load_noise(b.optical, std::nan(""), 25e9, 50e9, rs), ParameterError);
}

TEST(RunLink, SinglePassAllPassZeroLengthIsIdentity) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 9, 2048, 256);
    SpanConfig span;
    span.length_m = 0;
    const auto states = run_link(b.optical, span, NodeConfig{}, 1);
    ASSERT_EQ(states.size(), 1u);
    EXPECT_TRUE(states[0].x.samples == b.optical.x.samples);
}

TEST(RunLink, HookSeesEveryPass) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 9, 2048, 256);
    std::vector<int> seen;
    run_link(b.optical, SpanConfig{}, NodeConfig{}, 3, [&](DualPolWaveform&, int p) { seen.push_back(p); });
    EXPECT_EQ(seen, (std::vector<int>{1, 2, 3}));
}

namespace {

std::vector<double> per_pass_q2(NodeMode mode, Shaping shaping, int passes) {
    const Index n = 1 << 14;
    const auto b = standard_band(40e9, shaping, 11, n, 4096);
    RandomStream rs(11, "noise-link");
    const auto noisy = load_noise(b.optical, 16.0, 25e9, 50e9, rs);
    NodeConfig node;
    node.mode = mode;
    node.drop_filter.center_hz = 25e9;
    node.express_delay_s = 128 / 40e9;
    const SpanConfig span;
    const auto states = run_link(noisy, span, node, passes);
    RxConfig rx;
    rx.baud_hz = 40e9;
    rx.channel_center_hz = 25e9;
    rx.equalizer.training_symbols = 4096;
    std::vector<double> q2;
    for (int p = 0; p < passes; ++p) {
        rx.n_spans = p + 1;
        const auto r = receive(states[static_cast<std::size_t>(p)], b.tx.frames[2], rx);
        q2.push_back(ber_to_q2_db(std::max(r.ber, 1.0 / static_cast<double>(r.bits_counted))));
    }
    return q2;
}

} // namespace

TEST(RunLink, AllPassQ2IsFlat) {
    for (Shaping s : {Shaping::Nyquist, Shaping::Cyclic}) {
        const auto q2 = per_pass_q2(NodeMode::AllPass, s, 4);
        const auto [lo, hi] = std::minmax_element(q2.begin(), q2.end());
        EXPECT_LE(*hi - *lo, 0.3) << to_string(s);
    }
}

TEST(RunLink, AddDropQ2Decreases) {
    const auto q2 = per_pass_q2(NodeMode::AddDrop, Shaping::Nyquist, 4);
    for (std::size_t i = 1; i < q2.size(); ++i) EXPECT_LT(q2[i], q2[i - 1]) << "pass " << i + 1;
}

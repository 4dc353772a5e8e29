#include "test_util.hpp"

#include <cwdm/metrics.hpp>
#include <cwdm/rxdsp.hpp>

#include <gtest/gtest.h>

using namespace cwdm;
using namespace cwdm::testing;

namespace {

constexpr Index kSymbols = 1 << 14;
constexpr Index kTraining = 4096;
constexpr double kPi = std::numbers::pi;

RxConfig rx_for(double baud, double centre = 25e9) {
    RxConfig rx;
    rx.baud_hz = baud;
    rx.channel_center_hz = centre;
    rx.equalizer.training_symbols = kTraining;
    return rx;
}

DualPolWaveform selected(const TestBand& b, double centre = 25e9) {
    return normalize_power(select_channel(b.optical, centre, 60e9, 40e9));
}

DualPolWaveform rotate_symbols(const DualPolWaveform& w, Index symbols) {
    return w.map([&](const ComplexWaveform& p) { return delay(p, static_cast<double>(symbols) / 40e9); });
}

/// Unit-energy QPSK plus circular Gaussian noise of total variance n0.
SymbolVector awgn(const SymbolVector& s, double n0, std::uint64_t seed) {
    RandomStream rs(seed, "test-awgn");
    SymbolVector out = s;
    const double sd = std::sqrt(n0 / 2);
    for (Index i = 0; i < out.size(); ++i) out[i] += std::complex<double>(sd * rs.gaussian(), sd * rs.gaussian());
    return out;
}

/// Y tributary symbols as seen on the output at frame position k.
SymbolVector delayed(const SymbolVector& s, Index d) {
    const Index n = s.size();
    SymbolVector out(n);
    for (Index k = 0; k < n; ++k) out[(k + d) % n] = s[k];
    return out;
}

} // namespace

TEST(SelectChannel, SingleChannelIsResampledInput) {
    const auto w = shaped_channel(40e9, Shaping::Nyquist, 4096);
    const DualPolWaveform d(w, w);
    const auto out = select_channel(d, 0.0, 60e9, 40e9);
    EXPECT_EQ(out.sample_rate_hz(), 80e9);
    EXPECT_LE(rms_relative_error(out.x.samples, resample(w, 80e9).samples), 1e-9);
}

TEST(SelectChannel, NeighboursSuppressed) {
    const auto b = standard_band(40e9, Shaping::Cyclic, 1, kSymbols);
    const auto out = select_channel(b.optical, 25e9, 60e9, 40e9);
    const auto psd = estimate_psd(out.x, 100e6);
    const double inband = psd.integrate(-20e9, 20e9) / 40e9;
    double outside = 0;
    for (Index k = 0; k < psd.frequency_hz.size(); ++k)
        if (std::abs(psd.frequency_hz[k]) > 30e9 + 4 * psd.resolution_hz) outside = std::max(outside, psd.density[k]);
    EXPECT_LE(outside, inband * 1e-4);
}

TEST(SelectChannel, FrequencyErrorNeedsCfoCorrection) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 2, kSymbols, kTraining);
    auto rx = rx_for(40e9, 25e9 + 2e9);
    rx.correct_cfo = false;
    bool failed = false;
    try {
        failed = receive(b.optical, b.tx.frames[2], rx).ber > 0.2;
    } catch (const Error&) {
        failed = true;
    }
    EXPECT_TRUE(failed);
    rx.correct_cfo = true;
    const auto r = receive(b.optical, b.tx.frames[2], rx);
    EXPECT_EQ(r.bit_errors, 0);
    EXPECT_NEAR(r.cfo_hz, -2e9, 5e6);
}

TEST(EstimateCfo, ZeroOffset) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 3, kSymbols);
    const auto w = selected(b);
    const double resolution = w.sample_rate_hz() / static_cast<double>(w.size());
    EXPECT_LE(std::abs(estimate_cfo(w, 40e9)), resolution);
}

TEST(EstimateCfo, InjectedOffset) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 4, kSymbols);
    const auto w = selected(b);
    const double resolution = w.sample_rate_hz() / static_cast<double>(w.size());
    for (double f : {100e6, -730e6}) {
        const auto shifted = w.map([&](const ComplexWaveform& p) { return derotate(p, -f); });
        EXPECT_NEAR(estimate_cfo(shifted, 40e9), f, resolution);
    }
}

TEST(EstimateCfo, NoisyMonteCarlo) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto b = standard_band(40e9, Shaping::Nyquist, seed, 1 << 13, 1024);
        RandomStream rs(seed, "noise-cfo");
        const auto noisy = load_noise(b.optical, 20.0, 25e9, 50e9, rs);
        const auto w = normalize_power(select_channel(noisy, 25e9, 60e9, 40e9));
        const auto shifted = w.map([](const ComplexWaveform& p) { return derotate(p, -250e6); });
        EXPECT_NEAR(estimate_cfo(shifted, 40e9), 250e6, 5e6) << "seed " << seed;
    }
}

TEST(CompensateDispersion, ZeroSpansIsIdentity) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 5, 4096, 512);
    const auto w = selected(b);
    const auto out = compensate_dispersion(w, SpanConfig{}, 0);
    EXPECT_LE(rms_relative_error(out.x.samples, w.x.samples), 1e-12);
}

TEST(CompensateDispersion, InvertsSpan) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 6, kSymbols);
    const SpanConfig span;
    const auto w = selected(b);
    const auto dispersed = apply_filter(w, dispersion_response(span, 3.0));
    const auto back = compensate_dispersion(dispersed, span, 3);
    EXPECT_LE(rms_relative_error(back.x.samples, w.x.samples), 1e-6);
    EXPECT_LE(rms_relative_error(back.y.samples, w.y.samples), 1e-6);
}

TEST(CompensateDispersion, OverlapAddMatchesFullRecord) {
    const auto b = standard_band(40e9, Shaping::Cyclic, 7, kSymbols);
    const SpanConfig span;
    const auto dispersed = apply_filter(selected(b), dispersion_response(span, 2.0));
    const auto full = compensate_dispersion_full(dispersed, span, 2);
    const double memory = dispersion_memory_samples(span, 2, 80e9);
    EXPECT_GT(memory, 40.0);
    for (Index block : {Index{0}, Index{256}, Index{1024}}) {
        const auto ola = compensate_dispersion(dispersed, span, 2, block);
        EXPECT_LE(rms_relative_error(ola.x.samples, full.x.samples), 1e-6) << "block " << block;
    }
}

TEST(CompensateDispersion, RejectsShortBlock) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 5, 4096, 512);
    EXPECT_THROW(compensate_dispersion(selected(b), SpanConfig{}, 6, 16), ParameterError);
}

TEST(Synchronize, ZeroDelay) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 8, kSymbols, kTraining);
    const auto s = synchronize(selected(b), b.tx.frames[2], kDefaultPolDecorrelationSymbols);
    EXPECT_EQ(s.lag, 0);
    EXPECT_EQ(s.lag_y, kDefaultPolDecorrelationSymbols);
    EXPECT_GE(s.ratio_db, 6.0);
}

TEST(Synchronize, KnownDelay) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 9, kSymbols, kTraining);
    const auto s = synchronize(rotate_symbols(selected(b), 1000), b.tx.frames[2], kDefaultPolDecorrelationSymbols);
    EXPECT_EQ(s.lag, 1000);
}

TEST(Synchronize, FailsOnNoise) {
    const auto noise = white_noise(2 * kSymbols, 80e9, 3);
    const auto frame = generate_frame(1, kSymbols - kTraining, kTraining);
    EXPECT_THROW(synchronize(DualPolWaveform(noise, noise), frame, 320), SyncError);
}

TEST(Synchronize, AfterFourAddDropPasses) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto b = standard_band(40e9, Shaping::Nyquist, seed, kSymbols, kTraining);
        RandomStream rs(seed, "noise-sync");
        NodeConfig node;
        node.mode = NodeMode::AddDrop;
        node.drop_filter.center_hz = 25e9;
        const auto states = run_link(load_noise(b.optical, 16.0, 25e9, 50e9, rs), SpanConfig{}, node, 4);
        const auto w = compensate_dispersion(normalize_power(select_channel(states[3], 25e9, 60e9, 40e9)),
                                             SpanConfig{}, 4);
        const auto s = synchronize(w, b.tx.frames[2], kDefaultPolDecorrelationSymbols);
        // Span dispersion is referenced to the band centre: the +25 GHz slot keeps a bulk group delay.
        EXPECT_NEAR(static_cast<double>(s.lag), 4 * span_group_delay_s(SpanConfig{}, 25e9) * 40e9, 1.0);
        EXPECT_GE(s.ratio_db, 6.0) << "seed " << seed;
    }
}

TEST(Equalize, IdentityChannelLowEvm) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 10, kSymbols, kTraining);
    const auto& frame = b.tx.frames[2];
    const auto w = selected(b);
    const auto s = synchronize(w, frame, kDefaultPolDecorrelationSymbols);
    EqualizerConfig cfg;
    cfg.training_symbols = kTraining;
    const auto eq = equalize(w, cfg, frame, s);
    const SymbolVector ref_x = frame.sequence();
    const SymbolVector ref_y = delayed(ref_x, kDefaultPolDecorrelationSymbols);
    const Index lo = 1024, len = kSymbols - 2048;
    const double evm_x = (eq.x.segment(lo, len) - ref_x.segment(lo, len)).squaredNorm() / static_cast<double>(len);
    const double evm_y = (eq.y.segment(lo, len) - ref_y.segment(lo, len)).squaredNorm() / static_cast<double>(len);
    EXPECT_LE(db(evm_x), -30.0);
    EXPECT_LE(db(evm_y), -30.0);
    EXPECT_LT(eq.output_correlation, 0.1);
}

TEST(Equalize, SwappedPolarizationsRecovered) {
    const auto b = standard_band(40e9, Shaping::Nyquist, 11, kSymbols, kTraining);
    const DualPolWaveform swapped(b.optical.y, b.optical.x);
    const auto r = receive(swapped, b.tx.frames[2], rx_for(40e9));
    EXPECT_EQ(r.bit_errors, 0);
    EXPECT_GT(r.bits_counted, 0);
}

TEST(Equalize, RotatedPolarizationsRecovered) {
    const auto b = standard_band(40e9, Shaping::Cyclic, 12, kSymbols, kTraining);
    const double c = std::cos(0.6), s = std::sin(0.6);
    ComplexWaveform x = b.optical.x, y = b.optical.y;
    x.samples = c * b.optical.x.samples + s * std::complex<double>(0, 1) * b.optical.y.samples;
    y.samples = s * std::complex<double>(0, 1) * b.optical.x.samples + c * b.optical.y.samples;
    const auto r = receive(DualPolWaveform(x, y), b.tx.frames[2], rx_for(40e9));
    EXPECT_EQ(r.bit_errors, 0);
}

namespace {

/// Q^2 gain of cyclic over Nyquist at 40 Gbd with equal signal PSD over noise PSD.
double matched_psd_ratio_gain_db() {
    static const double gain = [] {
        const double osnr_nyquist = 13.0;
        const double osnr_cyclic = osnr_nyquist + 10 * std::log10(50.0 / 40.0);
        long long errors[2] = {0, 0}, bits[2] = {0, 0};
        for (std::uint64_t seed = 1; seed <= 2; ++seed) {
            int i = 0;
            for (Shaping m : {Shaping::Nyquist, Shaping::Cyclic}) {
                const auto b = standard_band(40e9, m, seed, 1 << 15, kTraining);
                RandomStream rs(seed, "noise-gain");
                const auto noisy =
                    load_noise(b.optical, m == Shaping::Nyquist ? osnr_nyquist : osnr_cyclic, 25e9, 50e9, rs);
                const auto r = receive(noisy, b.tx.frames[2], rx_for(40e9));
                errors[i] += r.bit_errors;
                bits[i] += r.bits_counted;
                ++i;
            }
        }
        return ber_to_q2_db(static_cast<double>(errors[1]) / static_cast<double>(bits[1])) -
               ber_to_q2_db(static_cast<double>(errors[0]) / static_cast<double>(bits[0]));
    }();
    return gain;
}

} // namespace

TEST(Equalize, CyclicGainAtMatchedPsdRatio) {
    EXPECT_NEAR(matched_psd_ratio_gain_db(), 10 * std::log10(50.0 / 40.0), 0.3);
}

TEST(Equalize, CyclicGainFollowsLinearMmseBound) {
    // Folded cyclic spectrum: the 2 x 5 GHz strips add coherently (twice the SNR)
    // over a quarter of the 40 GHz Nyquist band. Unbiased linear-MMSE SNR is the
    // harmonic mean 1 / <1 / (1 + snr(f))> - 1.
    const double snr = std::pow(10.0, 8.0 / 10);
    const double folded = 1 / (0.75 / (1 + snr) + 0.25 / (1 + 2 * snr)) - 1;
    EXPECT_NEAR(matched_psd_ratio_gain_db(), db(folded / snr), 0.15);
}

TEST(EstimatePhase, ConstantRotation) {
    const auto frame = generate_frame(13, 8192, 1024);
    const SymbolVector seq = frame.sequence();
    const SymbolVector rotated = seq * std::polar(1.0, kPi / 7);
    const auto out = estimate_phase(rotated, frame.training_symbols, 0, 64);
    for (Index k = 0; k < out.size(); ++k) ASSERT_LE(std::abs(std::arg(out[k] / seq[k])), 0.01) << k;
}

TEST(EstimatePhase, SlowRamp) {
    const auto frame = generate_frame(14, 16384 - 1024, 1024);
    const SymbolVector seq = frame.sequence();
    SymbolVector rotated(seq.size());
    for (Index k = 0; k < seq.size(); ++k) rotated[k] = seq[k] * std::polar(1.0, 1e-3 * static_cast<double>(k));
    const auto out = estimate_phase(rotated, frame.training_symbols, 0, 64);
    // The ramp is not periodic, so the record seam is excluded like the counted payload.
    for (Index k = 1024; k < out.size() - 1024; ++k) ASSERT_LE(std::abs(std::arg(out[k] / seq[k])), 0.05) << k;
}

TEST(EstimatePhase, NoRotationMatchesBypass) {
    const auto frame = generate_frame(15, (1 << 16) - 4096, 4096);
    const SymbolVector seq = frame.sequence();
    const double n0 = 1.0 / std::pow(10.0, 9.8 / 10);
    const SymbolVector rx = awgn(seq, n0, 15);
    const auto bypass = count_errors(rx, delayed(awgn(seq, n0, 16), 320), frame, 320, 1024);
    const auto corrected = count_errors(estimate_phase(rx, frame.training_symbols, 0, 64),
                                        delayed(awgn(seq, n0, 16), 320), frame, 320, 1024);
    const double sigma = std::sqrt(static_cast<double>(bypass.bit_errors));
    EXPECT_NEAR(static_cast<double>(corrected.bit_errors), static_cast<double>(bypass.bit_errors), 3 * sigma);
}

TEST(CountErrors, PerfectSymbols) {
    const auto frame = generate_frame(16, 8192, 1024);
    const SymbolVector seq = frame.sequence();
    const auto r = count_errors(seq, delayed(seq, 320), frame, 320, 1024);
    EXPECT_EQ(r.bit_errors, 0);
    EXPECT_EQ(r.ber, 0.0);
    EXPECT_GT(r.bits_counted, 0);
}

TEST(CountErrors, OneFlippedBitInMillion) {
    const Index n_payload = 250000;
    const auto frame = generate_frame(17, n_payload, 1024);
    SymbolVector x = frame.sequence();
    x[5000] = std::conj(x[5000]);  // flips b0 only
    const auto r = count_errors(x, delayed(frame.sequence(), 320), frame, 320, 0);
    EXPECT_EQ(r.bits_counted, 1000000);
    EXPECT_EQ(r.bit_errors, 1);
    EXPECT_DOUBLE_EQ(r.ber, 1e-6);
}

TEST(CountErrors, ResolvesSwapAndQuadrant) {
    const auto frame = generate_frame(18, 8192, 1024);
    const SymbolVector seq = frame.sequence();
    const std::complex<double> j(0, 1);
    const auto r = count_errors(-j * delayed(seq, 320), -seq, frame, 320, 1024);
    EXPECT_EQ(r.bit_errors, 0);
}

TEST(CountErrors, AwgnMatchesQFunction) {
    const double q = std::pow(10.0, 8.56 / 20);   // amplitude SNR per quadrature
    const double n0 = 1.0 / (q * q);               // Es/N0 = Q^2 for Gray QPSK
    const double theory = 0.5 * std::erfc(q / std::sqrt(2.0));
    EXPECT_NEAR(theory, 3.7e-3, 0.1e-3);
    const auto frame = generate_frame(19, (1 << 16) - 4096, 4096);
    const SymbolVector seq = frame.sequence();
    const auto r = count_errors(awgn(seq, n0, 1), delayed(awgn(seq, n0, 2), 320), frame, 320, 1024);
    EXPECT_GE(r.bits_counted, 100000);
    EXPECT_NEAR(r.ber / theory, 1.0, 0.1);
}

TEST(CountErrors, WeakTrainingRejected) {
    const auto frame = generate_frame(20, 8192, 1024);
    const auto noise = white_noise(frame.size(), 1.0, 4).samples;
    EXPECT_THROW(count_errors(noise, noise, frame, 320, 1024), CountingError);
}

TEST(Receive, NoiselessBackToBackIsErrorFree) {
    for (Shaping m : {Shaping::Nyquist, Shaping::Cyclic})
        for (double baud : {40e9, 47.5e9}) {
            const auto b = standard_band(baud, m, 21, kSymbols, kTraining);
            for (std::size_t ch : {0u, 2u}) {
                const double centre = ch == 0 ? -75e9 : 25e9;
                const auto r = receive(b.optical, b.tx.frames[ch], rx_for(baud, centre));
                EXPECT_EQ(r.bit_errors, 0) << to_string(m) << " " << baud << " ch " << ch;
            }
        }
}

TEST(Receive, DispersedSignalRecovered) {
    const auto b = standard_band(45e9, Shaping::Cyclic, 22, kSymbols, kTraining);
    auto w = b.optical;
    for (int i = 0; i < 3; ++i) w = apply_span(w, SpanConfig{});
    auto rx = rx_for(45e9);
    rx.n_spans = 3;
    EXPECT_EQ(receive(w, b.tx.frames[2], rx).bit_errors, 0);
}

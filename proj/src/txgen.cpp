#include <cwdm/txgen.hpp>

#include <cwdm/random.hpp>

#include <cmath>

namespace cwdm {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

std::string_view to_string(Shaping s) { return s == Shaping::Nyquist ? "nyquist" : "cyclic"; }

Shaping parse_shaping(std::string_view text) {
    if (text == "nyquist" || text == "Nyquist") return Shaping::Nyquist;
    if (text == "cyclic" || text == "Cyclic") return Shaping::Cyclic;
    throw ParameterError("unknown shaping mode '" + std::string(text) + "'");
}

void TxChannelConfig::validate() const {
    if (!std::isfinite(baud_hz) || baud_hz <= 0) throw ParameterError("baud rate must be positive");
    if (!std::isfinite(grid_hz) || grid_hz <= 0) throw ParameterError("grid spacing must be positive");
    if (!std::isfinite(roll_off) || roll_off < 0 || roll_off > 1) throw ParameterError("roll-off must lie in [0, 1]");
    if (!std::isfinite(carrier_offset_hz)) throw ParameterError("carrier offset must be finite");
    if (baud_hz > grid_hz) throw ParameterError("baud rate exceeds the grid slot (negative guard band)");
    if (shaping == Shaping::Cyclic && grid_hz * (1 + roll_off) / 2 > baud_hz)
        throw ParameterError("cyclic shaping needs baud >= grid(1+roll-off)/2 so the RZ copies fill the slot");
}

SymbolVector SymbolFrame::sequence() const {
    SymbolVector s(size());
    s << training_symbols, payload_symbols;
    return s;
}

BandConfig BandConfig::standard(double baud_hz, Shaping shaping, std::uint64_t run_seed, double roll_off,
                                double grid_hz) {
    BandConfig cfg;
    const double offsets[] = {-1.5 * grid_hz, -0.5 * grid_hz, 0.5 * grid_hz, 1.5 * grid_hz};
    for (std::size_t i = 0; i < 4; ++i) {
        TxChannelConfig ch;
        ch.baud_hz = baud_hz;
        ch.shaping = shaping;
        ch.roll_off = roll_off;
        ch.grid_hz = grid_hz;
        ch.carrier_offset_hz = offsets[i];
        ch.seed = splitmix64(run_seed ^ (0xC0FFEEULL + i));
        cfg.channels.push_back(ch);
    }
    return cfg;
}

double BandConfig::simulation_rate_hz() const {
    if (dac_rate_hz > 0) return dac_rate_hz;
    double max_baud = 0;
    for (const auto& ch : channels) max_baud = std::max(max_baud, ch.baud_hz);
    return kSimSamplesPerSymbol * max_baud;
}

void BandConfig::validate() const {
    if (channels.empty()) throw ParameterError("band needs at least one channel");
    for (std::size_t i = 0; i < channels.size(); ++i) {
        channels[i].validate();
        for (std::size_t j = 0; j < i; ++j)
            if (channels[i].carrier_offset_hz == channels[j].carrier_offset_hz)
                throw ParameterError("channel carriers must be distinct");
    }
}

std::complex<double> qpsk_map(std::uint8_t b0, std::uint8_t b1) {
    return {(b1 ? -1.0 : 1.0) * kInvSqrt2, (b0 ? -1.0 : 1.0) * kInvSqrt2};
}

std::pair<std::uint8_t, std::uint8_t> qpsk_demap(std::complex<double> s) {
    return {static_cast<std::uint8_t>(s.imag() < 0), static_cast<std::uint8_t>(s.real() < 0)};
}

std::complex<double> qpsk_decide(std::complex<double> s) {
    return {(s.real() < 0 ? -1.0 : 1.0) * kInvSqrt2, (s.imag() < 0 ? -1.0 : 1.0) * kInvSqrt2};
}

SymbolFrame generate_frame(std::uint64_t seed, Index n_payload, Index n_training) {
    if (n_payload < 1 || n_training < 1) throw ParameterError("frame lengths must be at least one symbol");
    SymbolFrame frame;
    frame.payload_symbols.resize(n_payload);
    frame.bits.resize(static_cast<std::size_t>(2 * n_payload));
    RandomStream payload(seed, "payload");
    std::uint64_t word = 0;
    int left = 0;
    auto next_bit = [&](RandomStream& rs) {
        if (left == 0) {
            word = rs.next_u64();
            left = 64;
        }
        const auto b = static_cast<std::uint8_t>(word & 1U);
        word >>= 1;
        --left;
        return b;
    };
    for (Index k = 0; k < n_payload; ++k) {
        const auto b0 = next_bit(payload);
        const auto b1 = next_bit(payload);
        frame.bits[static_cast<std::size_t>(2 * k)] = b0;
        frame.bits[static_cast<std::size_t>(2 * k + 1)] = b1;
        frame.payload_symbols[k] = qpsk_map(b0, b1);
    }
    RandomStream training(seed, "training");
    left = 0;
    frame.training_symbols.resize(n_training);
    for (Index k = 0; k < n_training; ++k) {
        const auto b0 = next_bit(training);
        const auto b1 = next_bit(training);
        frame.training_symbols[k] = qpsk_map(b0, b1);
    }
    return frame;
}

ComplexWaveform shape_channel(const SymbolFrame& frame, const TxChannelConfig& cfg, double dac_rate_hz) {
    cfg.validate();
    if (!(dac_rate_hz >= 2 * cfg.baud_hz))
        throw ParameterError("DAC rate must be at least 2 samples per symbol");
    const SymbolVector seq = frame.sequence();
    const Index n = seq.size();

    // 50 % duty-cycle RZ at 2 Sa/Symb: its spectrum repeats every baud.
    ComplexVector<double> rz = ComplexVector<double>::Zero(2 * n);
    for (Index k = 0; k < n; ++k) rz[2 * k] = seq[k];
    const ComplexWaveform rz_wave(std::move(rz), 2 * cfg.baud_hz);

    ComplexWaveform out;
    if (cfg.shaping == Shaping::Nyquist) {
        out = resample(apply_filter(rz_wave, design_rrc(cfg.roll_off, cfg.baud_hz)), dac_rate_hz);
    } else {
        if (dac_rate_hz < cfg.grid_hz * (1 + cfg.roll_off))
            throw ParameterError("DAC rate too low for a grid-wide cyclic spectrum");
        // Resampling the RZ signal is lossless at any rate >= 2*baud, so the
        // grid-wide RRC gives the same result here as at 2*grid Sa/s.
        out = apply_filter(resample(rz_wave, dac_rate_hz), design_rrc(cfg.roll_off, cfg.grid_hz));
    }
    out.samples /= std::sqrt(out.mean_power());
    return out;
}

ComplexWaveform multiplex_band(const std::vector<ComplexWaveform>& channels, const BandConfig& cfg) {
    if (channels.empty()) throw ParameterError("no channels to multiplex");
    if (channels.size() != cfg.channels.size()) throw ParameterError("waveform count does not match band config");
    const double rate = channels.front().sample_rate_hz;
    const Index n = channels.front().size();
    double span = 0;
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (channels[i].sample_rate_hz != rate || channels[i].size() != n)
            throw ParameterError("channels must share sample rate and length");
        span = std::max(span, std::abs(cfg.channels[i].carrier_offset_hz) + cfg.channels[i].grid_hz / 2);
    }
    if (span > rate / 2) throw ParameterError("sample rate too low for the band span");
    ComplexWaveform band = frequency_shift(channels[0], cfg.channels[0].carrier_offset_hz);
    for (std::size_t i = 1; i < channels.size(); ++i)
        band.samples += frequency_shift(channels[i], cfg.channels[i].carrier_offset_hz).samples;
    return band;
}

DualPolWaveform emulate_polmux(const ComplexWaveform& w, Index decorrelation_symbols, double baud_hz,
                               std::vector<std::string>* warnings, Index equalizer_taps) {
    if (decorrelation_symbols < 0) throw ParameterError("decorrelation delay must be non-negative");
    if (decorrelation_symbols < equalizer_taps && warnings)
        warnings->push_back("polarization decorrelation of " + std::to_string(decorrelation_symbols) +
                            " symbols is shorter than the equalizer memory; tributaries are correlated");
    ComplexWaveform x = w;
    x.samples *= kInvSqrt2;
    ComplexWaveform y = decorrelation_symbols == 0 ? x : delay(x, static_cast<double>(decorrelation_symbols) / baud_hz);
    return {std::move(x), std::move(y)};
}

TxBand synthesize_band(const BandConfig& cfg, Index n_payload, Index n_training) {
    cfg.validate();
    TxBand out;
    std::vector<ComplexWaveform> waves;
    const double rate = cfg.simulation_rate_hz();
    for (const auto& ch : cfg.channels) {
        out.frames.push_back(generate_frame(ch.seed, n_payload, n_training));
        waves.push_back(shape_channel(out.frames.back(), ch, rate));
    }
    out.band = multiplex_band(waves, cfg);
    return out;
}

} // namespace cwdm

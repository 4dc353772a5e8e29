#ifndef CWDM_TXGEN_HPP
#define CWDM_TXGEN_HPP

// Transmitter: QPSK frames, zero-interleaved RZ shaping into Nyquist or
// cyclic spectra, WDM multiplexing and polarization-multiplexing emulation.

#include <cwdm/dsp.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cwdm {

enum class Shaping { Nyquist, Cyclic };

std::string_view to_string(Shaping s);
Shaping parse_shaping(std::string_view text);

using SymbolVector = ComplexVector<double>;

/// One WDM channel.
struct TxChannelConfig {
    double baud_hz = 40e9;
    Shaping shaping = Shaping::Nyquist;
    double roll_off = 0.01;
    double grid_hz = 50e9;
    double carrier_offset_hz = 0;  // relative to band centre, detuning included
    std::uint64_t seed = 1;

    void validate() const;

    /// Width of the flat spectrum: the baud rate (Nyquist) or the grid slot (cyclic).
    double signal_bandwidth_hz() const { return shaping == Shaping::Nyquist ? baud_hz : grid_hz; }
    /// (grid - baud) / grid.
    double guard_band_fraction() const { return (grid_hz - baud_hz) / grid_hz; }
    /// Width of the repeated strip at each spectral edge of a cyclic signal.
    double redundant_strip_hz() const { return shaping == Shaping::Cyclic ? (grid_hz - baud_hz) / 2 : 0.0; }
};

/// Known training prefix followed by the payload. The transmitted sequence
/// is training ++ payload and repeats with the record period.
struct SymbolFrame {
    SymbolVector training_symbols;
    SymbolVector payload_symbols;
    std::vector<std::uint8_t> bits;  // payload bits, two per symbol (b0, b1)

    Index size() const { return training_symbols.size() + payload_symbols.size(); }
    Index training_size() const { return training_symbols.size(); }
    SymbolVector sequence() const;
};

struct BandConfig {
    std::vector<TxChannelConfig> channels;
    double band_center_hz = 193.075e12;
    double dac_rate_hz = 0;  // 0 selects kSimSamplesPerSymbol x the highest baud

    /// Four channels at band centre +-25 and +-75 GHz, sharing baud and shaping,
    /// each with its own data seed.
    static BandConfig standard(double baud_hz, Shaping shaping, std::uint64_t run_seed, double roll_off = 0.01,
                               double grid_hz = 50e9);

    double simulation_rate_hz() const;
    void validate() const;
};

inline constexpr int kSimSamplesPerSymbol = 8;
inline constexpr Index kDefaultPolDecorrelationSymbols = 320;
inline constexpr Index kDefaultEqualizerTaps = 81;

/// Gray map: 00 -> (1+j), 01 -> (-1+j), 11 -> (-1-j), 10 -> (1-j), all over sqrt(2).
std::complex<double> qpsk_map(std::uint8_t b0, std::uint8_t b1);
/// Hard decision returning {b0, b1}.
std::pair<std::uint8_t, std::uint8_t> qpsk_demap(std::complex<double> s);
std::complex<double> qpsk_decide(std::complex<double> s);

SymbolFrame generate_frame(std::uint64_t seed, Index n_payload, Index n_training);

/// Zero-interleave to 2 Sa/Symb, then shape. Nyquist: RRC of width baud at
/// 2 Sa/Symb, then resample to the DAC rate. Cyclic: the RZ spectrum repeats
/// every baud, so a grid-wide RRC keeps shifted copies at both edges; the
/// grid-wide filter is applied after resampling to the DAC rate. Output has
/// unit mean power.
ComplexWaveform shape_channel(const SymbolFrame& frame, const TxChannelConfig& cfg, double dac_rate_hz);

/// Shift each channel onto its carrier offset (nearest DFT bin) and sum.
ComplexWaveform multiplex_band(const std::vector<ComplexWaveform>& channels, const BandConfig& cfg);

/// x = w/sqrt2, y = delayed copy of w/sqrt2. Appends a warning when the
/// delay is shorter than the equalizer memory.
DualPolWaveform emulate_polmux(const ComplexWaveform& w, Index decorrelation_symbols, double baud_hz,
                               std::vector<std::string>* warnings = nullptr,
                               Index equalizer_taps = kDefaultEqualizerTaps);

struct TxBand {
    ComplexWaveform band;
    std::vector<SymbolFrame> frames;  // one per channel, same order as the config
};

/// Frames, shaping and multiplexing for every channel of `cfg`.
TxBand synthesize_band(const BandConfig& cfg, Index n_payload, Index n_training);

} // namespace cwdm

#endif // CWDM_TXGEN_HPP

#ifndef CWDM_RXDSP_HPP
#define CWDM_RXDSP_HPP

// Receiver: channel selection to 2 Sa/Symb, fourth-power CFO estimation,
// overlap-add dispersion compensation, pattern synchronization, LMS -> CMA
// 2x2 butterfly, block ML phase estimation and error counting.

#include <cwdm/channel.hpp>
#include <cwdm/dsp.hpp>
#include <cwdm/txgen.hpp>

namespace cwdm {

struct EqualizerConfig {
    Index n_taps = 81;
    double mu_lms = 1e-3;
    double mu_cma = 1e-4;
    Index training_symbols = 4096;
    double cma_radius = 1.0;
    int lms_epochs = 4;

    void validate() const;
};

struct RxConfig {
    double baud_hz = 40e9;
    double channel_center_hz = 25e9;  // band-relative LO frequency
    double prefilter_bw_hz = 60e9;
    bool correct_cfo = true;
    SpanConfig span{};
    double n_spans = 0;               // dispersion to undo, in spans
    Index ola_block = 0;              // 0 selects the smallest power of two >= 4x memory
    EqualizerConfig equalizer{};
    Index phase_block = 64;
    Index boundary_symbols = 1024;
    Index pol_delay_symbols = kDefaultPolDecorrelationSymbols;  // Y tributary = X delayed by this
    bool zero_redundant_strips = false;  // remove |f| > baud/2 before equalization

    void validate() const;
};

struct SyncResult {
    Index lag = 0;        // symbol index of the X training start
    Index lag_y = 0;      // symbol index of the Y training start
    int phase = 0;        // decimation phase (0 or 1) at 2 Sa/Symb
    double ratio_db = 0;  // main peak over the strongest other lag
};

struct EqualizedSymbols {
    SymbolVector x;
    SymbolVector y;
    double output_correlation = 0;  // |<x, y>| / (|x||y|) at lag 0
};

struct RxResult {
    SymbolVector symbols_x;
    SymbolVector symbols_y;
    double cfo_hz = 0;
    Index sync_lag = 0;
    double sync_ratio_db = 0;
    double ber = 0;
    long long bit_errors = 0;
    long long bits_counted = 0;
};

/// Shift `channel_center_hz` to DC, apply a flat-top pre-filter and keep
/// 2 samples per symbol (one FFT, spectrum truncation).
DualPolWaveform select_channel(const DualPolWaveform& band, double channel_center_hz, double prefilter_bw_hz,
                               double baud_hz, bool zero_redundant_strips = false);

/// Scale each polarization to unit mean power.
DualPolWaveform normalize_power(const DualPolWaveform& w);

/// Fourth-power spectral peak, searched over |offset| <= baud/8 with
/// parabolic interpolation between bins.
double estimate_cfo(const DualPolWaveform& w, double baud_hz);

/// Smallest dispersion memory in samples, |D L n| lambda^2 fs^2 / c.
double dispersion_memory_samples(const SpanConfig& span, double n_spans, double sample_rate_hz);

/// Overlap-add dispersion compensation with periodic Hann windows at 50 %
/// overlap, circular over the record. block = 0 picks a default.
DualPolWaveform compensate_dispersion(const DualPolWaveform& w, const SpanConfig& span, double n_spans,
                                      Index block = 0);

/// Whole-record conjugate filter, the oracle for compensate_dispersion.
DualPolWaveform compensate_dispersion_full(const DualPolWaveform& w, const SpanConfig& span, double n_spans);

/// Circular correlation of both decimation phases against the training.
/// The metric is pol-rotation invariant (power summed over both inputs) and
/// requires the Y copy `pol_delay_symbols` later.
SyncResult synchronize(const DualPolWaveform& w, const SymbolFrame& frame, Index pol_delay_symbols);

/// Half-symbol-spaced 2x2 butterfly, y = w^H u. Data-aided LMS over the
/// training of both tributaries, then CMA over two passes of the record; the
/// second pass is returned, one symbol per frame position (index 0 = X
/// training start).
EqualizedSymbols equalize(const DualPolWaveform& w, const EqualizerConfig& cfg, const SymbolFrame& frame,
                          const SyncResult& sync);

/// Block ML phase, arg sum r conj(a), with a the pilot where known and the
/// decision otherwise. Blocks are walked circularly from the pilot start,
/// so the estimate is unwrapped; phases are interpolated between centres.
SymbolVector estimate_phase(const SymbolVector& symbols, const SymbolVector& pilots, Index pilot_start,
                            Index block_len = 64);

/// Resolves tributary permutation and the four-fold phase ambiguity by
/// training correlation, then counts payload bit errors away from the
/// record boundaries.
RxResult count_errors(const SymbolVector& out_a, const SymbolVector& out_b, const SymbolFrame& frame,
                      Index pol_delay_symbols, Index boundary_symbols = 1024);

/// Full chain from the optical band to the error count.
RxResult receive(const DualPolWaveform& band, const SymbolFrame& frame, const RxConfig& cfg);

} // namespace cwdm

#endif // CWDM_RXDSP_HPP

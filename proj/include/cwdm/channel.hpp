#ifndef CWDM_CHANNEL_HPP
#define CWDM_CHANNEL_HPP

// Link model: erf-edge WSS add/drop node, SSMF dispersion, ASE noise loading
// and the recirculating loop.

#include <cwdm/dsp.hpp>
#include <cwdm/random.hpp>

#include <functional>
#include <vector>

namespace cwdm {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kOsnrReferenceBandwidthHz = 12.5e9;

/// Flat-top WSS passband: a rectangle convolved with a Gaussian, rescaled so
/// the half-power points sit at center +- bandwidth_3db/2.
struct WssFilterModel {
    double center_hz = 0;             // band-relative
    double bandwidth_3db_hz = 44e9;
    double edge_fwhm_hz = 4.5e9;      // FWHM of the Gaussian edge kernel

    void validate() const;
    double edge_sigma_hz() const;
    /// Width of the underlying rectangle that puts |H|^2 = 0.5 at +-B/2.
    double rectangle_width_hz() const;
    /// Drop amplitude at offset f from the centre.
    double amplitude(double offset_hz) const;
};

FrequencyResponse wss_response(const WssFilterModel& m);

/// -3 dB two-sided width of |H|^n, by bisection.
double cascade_bandwidth_3db_hz(const WssFilterModel& m, int n);

enum class NodeMode { AllPass, AddDrop };

struct NodeConfig {
    NodeMode mode = NodeMode::AllPass;
    WssFilterModel drop_filter{};  // centre is the band-relative target
    double band_center_hz = 193.075e12;
    double grid_hz = 50e9;
    double express_delay_s = 128 / 40e9;
    bool express_enabled = true;

    void validate() const;
    double target_absolute_hz() const { return band_center_hz + drop_filter.center_hz; }
};

/// Node transfer function: H_drop(f) + H_express(f) exp(-j 2 pi f tau), with
/// H_express = sqrt(1 - H_drop^2). The 50/50 coupler's 1/sqrt2 is cancelled
/// by the renormalization that keeps an unfiltered channel at unit gain.
FrequencyResponse node_response(const NodeConfig& node);

DualPolWaveform apply_node(const DualPolWaveform& band, const NodeConfig& node);

struct SpanConfig {
    double length_m = 80e3;
    double dispersion_ps_nm_km = 17.0;
    double reference_lambda_m = 1552.7e-9;

    void validate() const;
    /// D * L in s/m.
    double accumulated_dispersion_s_per_m() const { return dispersion_ps_nm_km * 1e-6 * length_m; }
    /// beta = pi D L lambda^2 / c, so that H(f) = exp(-j beta f^2).
    double quadratic_phase_s2() const;
};

/// exp(-j sign * n_spans * beta f^2).
FrequencyResponse dispersion_response(const SpanConfig& span, double n_spans);

DualPolWaveform apply_span(const DualPolWaveform& band, const SpanConfig& span);

/// Group delay tau(f) = -(1/2pi) dphi/df of the span response.
double span_group_delay_s(const SpanConfig& span, double f_hz);

/// Adds white circular Gaussian noise to both polarizations so that the
/// power in [slot_center +- slot_bw/2] over the noise power in ref_bw equals
/// the target. target = +inf returns the input.
DualPolWaveform load_noise(const DualPolWaveform& band, double target_osnr_db, double slot_center_hz,
                           double slot_bw_hz, RandomStream& stream,
                           double ref_bw_hz = kOsnrReferenceBandwidthHz);

/// OSNR read off Welch spectra: the noise density is the mean over
/// [noise_lo, noise_hi] (a signal-free region), the signal power is the slot
/// integral minus that floor.
double measure_osnr_db(const DualPolWaveform& band, double slot_center_hz, double slot_bw_hz, double noise_lo_hz,
                       double noise_hi_hz, double rbw_hz, double ref_bw_hz = kOsnrReferenceBandwidthHz);

/// Called after each pass with the pass number (1-based); may modify the band.
using PassHook = std::function<void(DualPolWaveform&, int)>;

/// n_passes x (span, node). Element i of the result is the band after pass i+1.
std::vector<DualPolWaveform> run_link(const DualPolWaveform& band, const SpanConfig& span, const NodeConfig& node,
                                      int n_passes, const PassHook& per_pass = {});

} // namespace cwdm

#endif // CWDM_CHANNEL_HPP

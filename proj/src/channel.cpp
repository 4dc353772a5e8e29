#include <cwdm/channel.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace cwdm {

namespace {

double edge_amplitude(double rect_width, double sigma, double f) {
    const double s = sigma * std::numbers::sqrt2;
    return 0.5 * (std::erf((rect_width / 2 - f) / s) + std::erf((rect_width / 2 + f) / s));
}

} // namespace

void WssFilterModel::validate() const {
    if (!std::isfinite(center_hz)) throw ParameterError("WSS centre must be finite");
    if (!std::isfinite(bandwidth_3db_hz) || bandwidth_3db_hz <= 0)
        throw ParameterError("WSS 3-dB bandwidth must be positive");
    if (!std::isfinite(edge_fwhm_hz) || edge_fwhm_hz <= 0) throw ParameterError("WSS edge width must be positive");
}

double WssFilterModel::edge_sigma_hz() const { return edge_fwhm_hz / (2 * std::sqrt(2 * std::numbers::ln2)); }

double WssFilterModel::rectangle_width_hz() const {
    validate();
    const double sigma = edge_sigma_hz();
    const double target = std::sqrt(0.5);
    // Amplitude at B/2 rises monotonically with the rectangle width.
    double lo = 0, hi = bandwidth_3db_hz + 20 * sigma;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (edge_amplitude(mid, sigma, bandwidth_3db_hz / 2) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double WssFilterModel::amplitude(double offset_hz) const {
    return edge_amplitude(rectangle_width_hz(), edge_sigma_hz(), offset_hz);
}

FrequencyResponse wss_response(const WssFilterModel& m) {
    const double width = m.rectangle_width_hz();
    const double sigma = m.edge_sigma_hz();
    return {m.center_hz, [=](double f) -> std::complex<double> { return edge_amplitude(width, sigma, f); }};
}

double cascade_bandwidth_3db_hz(const WssFilterModel& m, int n) {
    if (n < 1) throw ParameterError("cascade length must be at least 1");
    const double width = m.rectangle_width_hz();
    const double sigma = m.edge_sigma_hz();
    const double target = std::pow(0.5, 0.5 / n);  // |H|^n = sqrt(0.5)
    double lo = 0, hi = width / 2 + 20 * sigma;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (edge_amplitude(width, sigma, mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return lo + hi;
}

void NodeConfig::validate() const {
    drop_filter.validate();
    if (!std::isfinite(express_delay_s) || express_delay_s < 0)
        throw ParameterError("express delay must be finite and non-negative");
    if (!std::isfinite(grid_hz) || grid_hz <= 0) throw ParameterError("node grid must be positive");
    if (mode == NodeMode::AddDrop) {
        const double slots = target_absolute_hz() / grid_hz;
        if (std::abs(slots - std::round(slots)) > 1e-6)
            throw ParameterError("add/drop target " + std::to_string(target_absolute_hz()) +
                                 " Hz is not on the grid");
    }
}

FrequencyResponse node_response(const NodeConfig& node) {
    node.validate();
    if (node.mode == NodeMode::AllPass) return {0, [](double) -> std::complex<double> { return 1.0; }};
    const double width = node.drop_filter.rectangle_width_hz();
    const double sigma = node.drop_filter.edge_sigma_hz();
    const double fc = node.drop_filter.center_hz;
    const double tau = node.express_delay_s;
    const bool express = node.express_enabled;
    return {0, [=](double f) -> std::complex<double> {
                const double hd = edge_amplitude(width, sigma, f - fc);
                if (!express) return hd;
                const double he = std::sqrt(std::max(0.0, 1 - hd * hd));
                return hd + he * std::polar(1.0, -2 * std::numbers::pi * f * tau);
            }};
}

DualPolWaveform apply_node(const DualPolWaveform& band, const NodeConfig& node) {
    band.validate();
    if (node.mode == NodeMode::AllPass) {
        node.validate();
        return band;
    }
    if (node.express_delay_s >= band.x.duration_s()) throw ParameterError("express delay exceeds the record");
    const double fs = band.sample_rate_hz();
    if (std::abs(node.drop_filter.center_hz) + node.grid_hz / 2 > fs / 2)
        throw ParameterError("drop target outside the simulated band");
    return apply_filter(band, node_response(node));
}

void SpanConfig::validate() const {
    if (!std::isfinite(length_m) || length_m < 0) throw ParameterError("span length must be non-negative");
    if (!std::isfinite(dispersion_ps_nm_km)) throw ParameterError("dispersion must be finite");
    if (!std::isfinite(reference_lambda_m) || reference_lambda_m <= 0)
        throw ParameterError("reference wavelength must be positive");
}

double SpanConfig::quadratic_phase_s2() const {
    return std::numbers::pi * accumulated_dispersion_s_per_m() * reference_lambda_m * reference_lambda_m /
           kSpeedOfLight;
}

FrequencyResponse dispersion_response(const SpanConfig& span, double n_spans) {
    span.validate();
    const double beta = n_spans * span.quadratic_phase_s2();
    return {0, [beta](double f) -> std::complex<double> { return std::polar(1.0, -beta * f * f); }};
}

DualPolWaveform apply_span(const DualPolWaveform& band, const SpanConfig& span) {
    span.validate();
    if (span.length_m == 0 || span.dispersion_ps_nm_km == 0) return band;
    return apply_filter(band, dispersion_response(span, 1.0));
}

double span_group_delay_s(const SpanConfig& span, double f_hz) {
    // phi = -beta f^2, tau = -(1/2pi) dphi/df = beta f / pi.
    return span.quadratic_phase_s2() * f_hz / std::numbers::pi;
}

DualPolWaveform load_noise(const DualPolWaveform& band, double target_osnr_db, double slot_center_hz,
                           double slot_bw_hz, RandomStream& stream, double ref_bw_hz) {
    band.validate();
    if (std::isinf(target_osnr_db) && target_osnr_db > 0) return band;
    if (!std::isfinite(target_osnr_db)) throw ParameterError("target OSNR must be finite or +inf");
    if (!(slot_bw_hz > 0) || !(ref_bw_hz > 0)) throw ParameterError("bandwidths must be positive");
    const double lo = slot_center_hz - slot_bw_hz / 2;
    const double hi = slot_center_hz + slot_bw_hz / 2;
    const double power = band_power(band.x, lo, hi) + band_power(band.y, lo, hi);
    if (!(power > 0)) throw ParameterError("no signal power in the measurement slot");
    const double fs = band.sample_rate_hz();
    const double osnr = std::pow(10.0, target_osnr_db / 10);
    // Each pol's noise has density var/fs; both pols fall in the reference band.
    const double variance = power * fs / (2 * ref_bw_hz * osnr);
    const double scale = std::sqrt(variance / 2);
    DualPolWaveform out = band;
    for (auto* pol : {&out.x, &out.y})
        for (Index i = 0; i < pol->size(); ++i) {
            const double re = stream.gaussian();
            const double im = stream.gaussian();
            pol->samples[i] += std::complex<double>(scale * re, scale * im);
        }
    return out;
}

double measure_osnr_db(const DualPolWaveform& band, double slot_center_hz, double slot_bw_hz, double noise_lo_hz,
                       double noise_hi_hz, double rbw_hz, double ref_bw_hz) {
    const PowerSpectrum px = estimate_psd(band.x, rbw_hz);
    const PowerSpectrum py = estimate_psd(band.y, rbw_hz);
    double noise_density = 0;
    Index count = 0;
    for (Index k = 0; k < px.frequency_hz.size(); ++k)
        if (px.frequency_hz[k] >= noise_lo_hz && px.frequency_hz[k] <= noise_hi_hz) {
            noise_density += px.density[k] + py.density[k];
            ++count;
        }
    if (count == 0) throw EstimationError("noise measurement window holds no PSD bins");
    noise_density /= static_cast<double>(count);
    const double lo = slot_center_hz - slot_bw_hz / 2;
    const double hi = slot_center_hz + slot_bw_hz / 2;
    Index slot_bins = 0;
    for (Index k = 0; k < px.frequency_hz.size(); ++k)
        if (px.frequency_hz[k] >= lo && px.frequency_hz[k] <= hi) ++slot_bins;
    const double total = px.integrate(lo, hi) + py.integrate(lo, hi);
    const double signal = total - noise_density * px.resolution_hz * static_cast<double>(slot_bins);
    if (!(signal > 0)) throw EstimationError("signal power below the noise floor");
    return 10 * std::log10(signal / (noise_density * ref_bw_hz));
}

std::vector<DualPolWaveform> run_link(const DualPolWaveform& band, const SpanConfig& span, const NodeConfig& node,
                                      int n_passes, const PassHook& per_pass) {
    if (n_passes < 1) throw ParameterError("pass count must be at least 1");
    std::vector<DualPolWaveform> states;
    states.reserve(static_cast<std::size_t>(n_passes));
    DualPolWaveform current = band;
    for (int pass = 1; pass <= n_passes; ++pass) {
        current = apply_node(apply_span(current, span), node);
        if (per_pass) per_pass(current, pass);
        states.push_back(current);
    }
    return states;
}

} // namespace cwdm

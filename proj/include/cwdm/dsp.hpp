#ifndef CWDM_DSP_HPP
#define CWDM_DSP_HPP

// Sample-domain primitives: waveform containers, DFT filtering, rational
// resampling, fractional delays and Welch power spectra.
//
// All transforms act on the whole record, so every operation here has
// circular semantics. Records are treated as one period of a periodic signal.

#include <cwdm/errors.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <utility>

namespace cwdm {

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Uniformly sampled complex baseband field of one polarization.
template <typename Scalar>
struct BasicWaveform {
    ComplexVector<Scalar> samples;
    Scalar sample_rate_hz{1};

    BasicWaveform() = default;
    BasicWaveform(ComplexVector<Scalar> s, Scalar rate_hz)
        : samples(std::move(s)), sample_rate_hz(rate_hz) {
        validate();
    }

    Index size() const { return samples.size(); }
    Scalar duration_s() const { return static_cast<Scalar>(size()) / sample_rate_hz; }
    Scalar energy() const { return samples.squaredNorm(); }
    Scalar mean_power() const { return energy() / static_cast<Scalar>(size()); }

    void validate() const {
        if (samples.size() < 1)
            throw ParameterError("waveform must hold at least one sample");
        if (!std::isfinite(sample_rate_hz) || sample_rate_hz <= 0)
            throw ParameterError("waveform sample rate must be finite and positive");
        if (!std::isfinite(energy()))
            throw ParameterError("waveform contains non-finite samples");
    }
};

/// X/Y polarization pair on one sample clock.
template <typename Scalar>
struct BasicDualPol {
    BasicWaveform<Scalar> x;
    BasicWaveform<Scalar> y;

    BasicDualPol() = default;
    BasicDualPol(BasicWaveform<Scalar> xp, BasicWaveform<Scalar> yp)
        : x(std::move(xp)), y(std::move(yp)) {
        validate();
    }

    Index size() const { return x.size(); }
    Scalar sample_rate_hz() const { return x.sample_rate_hz; }
    Scalar mean_power() const { return x.mean_power() + y.mean_power(); }

    void validate() const {
        x.validate();
        y.validate();
        if (x.sample_rate_hz != y.sample_rate_hz)
            throw ParameterError("polarizations must share one sample rate");
        if (x.size() != y.size())
            throw ParameterError("polarizations must have equal length");
    }

    template <typename F>
    BasicDualPol map(F&& f) const {
        return BasicDualPol(f(x), f(y));
    }
};

/// Complex gain as a function of baseband frequency, centred on
/// `center_offset_hz`: response(f) = evaluator(f - center_offset_hz).
template <typename Scalar>
struct BasicFrequencyResponse {
    Scalar center_offset_hz{0};
    std::function<std::complex<Scalar>(Scalar)> evaluator;

    std::complex<Scalar> operator()(Scalar f_hz) const { return evaluator(f_hz - center_offset_hz); }
};

template <typename Scalar>
struct BasicPowerSpectrum {
    RealVector<Scalar> frequency_hz;  // ascending
    RealVector<Scalar> density;       // power per Hz
    Scalar resolution_hz{};

    /// Integrated power over [f_lo, f_hi].
    Scalar integrate(Scalar f_lo, Scalar f_hi) const {
        Scalar acc = 0;
        for (Index k = 0; k < frequency_hz.size(); ++k)
            if (frequency_hz[k] >= f_lo && frequency_hz[k] <= f_hi) acc += density[k];
        return acc * resolution_hz;
    }
    Scalar total() const { return density.sum() * resolution_hz; }
};

using ComplexWaveform = BasicWaveform<double>;
using DualPolWaveform = BasicDualPol<double>;
using FrequencyResponse = BasicFrequencyResponse<double>;
using PowerSpectrum = BasicPowerSpectrum<double>;

// ---------------------------------------------------------------------------
// Transforms

namespace detail {
template <typename Scalar>
Eigen::FFT<Scalar>& fft_engine() {
    thread_local Eigen::FFT<Scalar> engine;
    return engine;
}
} // namespace detail

/// Unnormalized forward DFT.
template <typename Scalar>
ComplexVector<Scalar> fft(const ComplexVector<Scalar>& x) {
    ComplexVector<Scalar> out(x.size());
    detail::fft_engine<Scalar>().fwd(out, x);
    return out;
}

/// Inverse DFT including the 1/N factor.
template <typename Scalar>
ComplexVector<Scalar> ifft(const ComplexVector<Scalar>& x) {
    ComplexVector<Scalar> out(x.size());
    detail::fft_engine<Scalar>().inv(out, x);
    return out;
}

/// Signed frequency of DFT bin k for an n-point transform.
template <typename Scalar>
Scalar bin_frequency(Index k, Index n, Scalar rate_hz) {
    const Index signed_k = (k < (n + 1) / 2) ? k : k - n;
    return static_cast<Scalar>(signed_k) * rate_hz / static_cast<Scalar>(n);
}

template <typename Scalar>
RealVector<Scalar> bin_frequencies(Index n, Scalar rate_hz) {
    RealVector<Scalar> f(n);
    for (Index k = 0; k < n; ++k) f[k] = bin_frequency<Scalar>(k, n, rate_hz);
    return f;
}

/// Frequency actually applied by frequency_shift for a requested shift.
template <typename Scalar>
Scalar snapped_shift_hz(Index n, Scalar rate_hz, Scalar shift_hz) {
    const Scalar bin = rate_hz / static_cast<Scalar>(n);
    return std::round(shift_hz / bin) * bin;
}

// ---------------------------------------------------------------------------
// Filters

/// Root-raised-cosine amplitude response of two-sided width `bandwidth_hz`.
/// Unity for |f| <= B(1-b)/2, zero for |f| >= B(1+b)/2, zero phase.
template <typename Scalar>
BasicFrequencyResponse<Scalar> design_rrc(Scalar roll_off, Scalar bandwidth_hz) {
    if (!std::isfinite(roll_off) || roll_off < 0 || roll_off > 1)
        throw ParameterError("RRC roll-off must lie in [0, 1]");
    if (!std::isfinite(bandwidth_hz) || bandwidth_hz <= 0)
        throw ParameterError("RRC bandwidth must be finite and positive");
    const Scalar inner = bandwidth_hz * (1 - roll_off) / 2;
    const Scalar outer = bandwidth_hz * (1 + roll_off) / 2;
    const Scalar edge = bandwidth_hz / 2;
    return {0, [=](Scalar f) -> std::complex<Scalar> {
                const Scalar a = std::abs(f);
                if (roll_off == 0) {
                    if (a < edge) return 1;
                    if (a == edge) return std::sqrt(Scalar(0.5));
                    return 0;
                }
                if (a <= inner) return 1;
                if (a >= outer) return 0;
                const Scalar phase = std::numbers::pi_v<Scalar> / (roll_off * bandwidth_hz) * (a - inner);
                return std::sqrt(Scalar(0.5) * (1 + std::cos(phase)));
            }};
}

/// Ideal band-pass of width `bandwidth_hz` centred on `center_hz`.
template <typename Scalar>
BasicFrequencyResponse<Scalar> design_rectangle(Scalar bandwidth_hz, Scalar center_hz = 0) {
    if (!std::isfinite(bandwidth_hz) || bandwidth_hz <= 0)
        throw ParameterError("rectangle bandwidth must be finite and positive");
    return {center_hz, [half = bandwidth_hz / 2](Scalar f) -> std::complex<Scalar> {
                return std::abs(f) <= half ? Scalar(1) : Scalar(0);
            }};
}

/// Multiply the record's DFT by `h` sampled on the DFT bins (circular convolution).
template <typename Scalar>
BasicWaveform<Scalar> apply_filter(const BasicWaveform<Scalar>& w, const BasicFrequencyResponse<Scalar>& h) {
    w.validate();
    ComplexVector<Scalar> spectrum = fft(w.samples);
    const Index n = spectrum.size();
    for (Index k = 0; k < n; ++k) spectrum[k] *= h(bin_frequency<Scalar>(k, n, w.sample_rate_hz));
    return {ifft(spectrum), w.sample_rate_hz};
}

template <typename Scalar>
BasicDualPol<Scalar> apply_filter(const BasicDualPol<Scalar>& w, const BasicFrequencyResponse<Scalar>& h) {
    return w.map([&](const BasicWaveform<Scalar>& p) { return apply_filter(p, h); });
}

// ---------------------------------------------------------------------------
// Resampling

/// Largest denominator accepted when expressing a rate ratio as p/q.
inline constexpr std::int64_t kMaxResampleDenominator = 4096;

/// Best rational approximation p/q of `ratio` with q <= max_den, by continued
/// fractions. Returns {0, 0} when no such fraction is within 1e-12 relative.
inline std::pair<std::int64_t, std::int64_t> rational_ratio(double ratio,
                                                            std::int64_t max_den = kMaxResampleDenominator) {
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double x = ratio;
    for (int iter = 0; iter < 64; ++iter) {
        const double a = std::floor(x);
        const auto ai = static_cast<std::int64_t>(a);
        const std::int64_t p2 = ai * p1 + p0;
        const std::int64_t q2 = ai * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if (std::abs(static_cast<double>(p1) / static_cast<double>(q1) - ratio) <= 1e-12 * ratio) return {p1, q1};
        const double frac = x - a;
        if (frac < 1e-15) break;
        x = 1.0 / frac;
    }
    if (q1 > 0 && std::abs(static_cast<double>(p1) / static_cast<double>(q1) - ratio) <= 1e-12 * ratio)
        return {p1, q1};
    return {0, 0};
}

/// Zero-pad or truncate an n-point spectrum to m points. The Nyquist bin of
/// an even-length input is split evenly on upsampling and the two edge bins
/// are merged on downsampling, so up-then-down is exact.
template <typename Scalar>
ComplexVector<Scalar> resize_spectrum(const ComplexVector<Scalar>& x, Index m) {
    const Index n = x.size();
    if (m == n) return x;
    ComplexVector<Scalar> y = ComplexVector<Scalar>::Zero(m);
    if (m > n) {
        const Index pos = (n + 1) / 2;  // bins 0..pos-1 are non-negative
        const Index neg = n / 2;        // bins n-neg..n-1 are negative (incl. Nyquist if even)
        y.head(pos) = x.head(pos);
        if (n % 2 == 0) {
            y.tail(neg - 1) = x.tail(neg - 1);
            y[n / 2] = x[n / 2] / Scalar(2);
            y[m - n / 2] = x[n / 2] / Scalar(2);
        } else {
            y.tail(neg) = x.tail(neg);
        }
    } else {
        const Index pos = (m + 1) / 2;
        const Index neg = m / 2;
        y.head(pos) = x.head(pos);
        if (m % 2 == 0) {
            y.tail(neg - 1) = x.tail(neg - 1);
            y[m / 2] = x[m / 2] + x[n - m / 2];
        } else {
            y.tail(neg) = x.tail(neg);
        }
    }
    return y;
}

/// Band-limited rate conversion by spectral zero-padding or truncation.
/// The ratio must be p/q with q <= kMaxResampleDenominator and the output
/// length n*p/q must be an integer.
template <typename Scalar>
BasicWaveform<Scalar> resample(const BasicWaveform<Scalar>& w, Scalar new_rate_hz) {
    w.validate();
    if (!std::isfinite(new_rate_hz) || new_rate_hz <= 0)
        throw ParameterError("resample target rate must be finite and positive");
    if (new_rate_hz == w.sample_rate_hz) return w;
    const double ratio = static_cast<double>(new_rate_hz) / static_cast<double>(w.sample_rate_hz);
    const auto [p, q] = rational_ratio(ratio);
    if (q == 0) throw ParameterError("resample ratio is not a rational with bounded denominator");
    const std::int64_t n = w.size();
    if ((n * p) % q != 0)
        throw ParameterError("resample output length " + std::to_string(n) + "*" + std::to_string(p) + "/" +
                             std::to_string(q) + " is not an integer");
    const Index m = static_cast<Index>(n * p / q);
    ComplexVector<Scalar> out = ifft(resize_spectrum(fft(w.samples), m));
    out *= static_cast<Scalar>(m) / static_cast<Scalar>(n);
    return {std::move(out), new_rate_hz};
}

// ---------------------------------------------------------------------------
// Delay and frequency translation

/// Circular delay by a linear phase ramp; whole-sample delays rotate exactly.
template <typename Scalar>
BasicWaveform<Scalar> delay(const BasicWaveform<Scalar>& w, Scalar delay_s) {
    w.validate();
    if (!std::isfinite(delay_s) || std::abs(delay_s) >= w.duration_s())
        throw ParameterError("delay magnitude must be shorter than the waveform");
    const Index n = w.size();
    const Scalar in_samples = delay_s * w.sample_rate_hz;
    const Scalar whole = std::round(in_samples);
    if (std::abs(in_samples - whole) < Scalar(1e-9)) {
        const Index k = ((static_cast<Index>(whole) % n) + n) % n;
        ComplexVector<Scalar> out(n);
        out.tail(n - k) = w.samples.head(n - k);
        out.head(k) = w.samples.tail(k);
        return {std::move(out), w.sample_rate_hz};
    }
    ComplexVector<Scalar> spectrum = fft(w.samples);
    const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    for (Index k = 0; k < n; ++k) {
        const Scalar f = bin_frequency<Scalar>(k, n, w.sample_rate_hz);
        spectrum[k] *= std::polar(Scalar(1), -two_pi * f * delay_s);
    }
    return {ifft(spectrum), w.sample_rate_hz};
}

/// Translate by the DFT bin nearest `shift_hz`, keeping the record periodic.
template <typename Scalar>
BasicWaveform<Scalar> frequency_shift(const BasicWaveform<Scalar>& w, Scalar shift_hz) {
    w.validate();
    const Index n = w.size();
    const auto bins = static_cast<std::int64_t>(std::llround(shift_hz * static_cast<Scalar>(n) / w.sample_rate_hz));
    if (bins % n == 0) return w;
    ComplexVector<Scalar> out(n);
    const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    const std::int64_t nn = n;
    for (Index i = 0; i < n; ++i) {
        const std::int64_t phase_index = ((bins % nn) * static_cast<std::int64_t>(i) % nn + nn) % nn;
        out[i] = w.samples[i] * std::polar(Scalar(1), two_pi * static_cast<Scalar>(phase_index) / static_cast<Scalar>(n));
    }
    return {std::move(out), w.sample_rate_hz};
}

template <typename Scalar>
BasicDualPol<Scalar> frequency_shift(const BasicDualPol<Scalar>& w, Scalar shift_hz) {
    return w.map([&](const BasicWaveform<Scalar>& p) { return frequency_shift(p, shift_hz); });
}

/// Multiply by exp(-j 2 pi f t) for an arbitrary f (not periodic unless f is on a bin).
template <typename Scalar>
BasicWaveform<Scalar> derotate(const BasicWaveform<Scalar>& w, Scalar offset_hz) {
    ComplexVector<Scalar> out(w.size());
    const Scalar step = -2 * std::numbers::pi_v<Scalar> * offset_hz / w.sample_rate_hz;
    for (Index i = 0; i < w.size(); ++i) out[i] = w.samples[i] * std::polar(Scalar(1), step * static_cast<Scalar>(i));
    return {std::move(out), w.sample_rate_hz};
}

// ---------------------------------------------------------------------------
// Spectra

/// Exact power (Parseval) of the DFT bins falling in [f_lo, f_hi].
template <typename Scalar>
Scalar band_power(const BasicWaveform<Scalar>& w, Scalar f_lo, Scalar f_hi) {
    const ComplexVector<Scalar> spectrum = fft(w.samples);
    const Index n = spectrum.size();
    Scalar acc = 0;
    for (Index k = 0; k < n; ++k) {
        const Scalar f = bin_frequency<Scalar>(k, n, w.sample_rate_hz);
        if (f >= f_lo && f <= f_hi) acc += std::norm(spectrum[k]);
    }
    return acc / (static_cast<Scalar>(n) * static_cast<Scalar>(n));
}

/// Welch estimate: periodic Hann segments of fs/rbw samples, 50 % overlap,
/// taken circularly so every sample is covered equally.
template <typename Scalar>
BasicPowerSpectrum<Scalar> estimate_psd(const BasicWaveform<Scalar>& w, Scalar rbw_hz) {
    w.validate();
    const Index n = w.size();
    if (!std::isfinite(rbw_hz) || rbw_hz <= 0) throw ParameterError("resolution bandwidth must be positive");
    const auto seg = static_cast<Index>(std::llround(w.sample_rate_hz / rbw_hz));
    if (seg > n || seg < 2)
        throw ParameterError("resolution bandwidth too fine for record length");

    RealVector<Scalar> window(seg);
    const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    for (Index i = 0; i < seg; ++i)
        window[i] = Scalar(0.5) - Scalar(0.5) * std::cos(two_pi * static_cast<Scalar>(i) / static_cast<Scalar>(seg));
    const Scalar window_power = window.squaredNorm();

    const Index hop = std::max<Index>(1, seg / 2);
    const Index segments = (seg == n) ? 1 : std::max<Index>(1, n / hop);
    RealVector<Scalar> acc = RealVector<Scalar>::Zero(seg);
    ComplexVector<Scalar> buf(seg);
    for (Index s = 0; s < segments; ++s) {
        const Index start = s * hop;
        for (Index i = 0; i < seg; ++i) buf[i] = w.samples[(start + i) % n] * window[i];
        acc += fft(buf).cwiseAbs2();
    }
    acc /= static_cast<Scalar>(segments) * window_power * w.sample_rate_hz;

    BasicPowerSpectrum<Scalar> out;
    out.resolution_hz = w.sample_rate_hz / static_cast<Scalar>(seg);
    out.frequency_hz.resize(seg);
    out.density.resize(seg);
    const Index neg = seg / 2;  // fftshift
    for (Index i = 0; i < seg; ++i) {
        const Index k = (i + (seg - neg)) % seg;
        out.frequency_hz[i] = bin_frequency<Scalar>(k, seg, w.sample_rate_hz);
        out.density[i] = acc[k];
    }
    return out;
}

} // namespace cwdm

#endif // CWDM_DSP_HPP

#include <cwdm/rxdsp.hpp>

#include <array>
#include <cmath>
#include <numbers>

namespace cwdm {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_phase(double a) { return a - 2 * kPi * std::floor((a + kPi) / (2 * kPi)); }

Index next_pow2(Index v) {
    Index p = 1;
    while (p < v) p <<= 1;
    return p;
}

Index mod(Index a, Index n) { return ((a % n) + n) % n; }

} // namespace

void EqualizerConfig::validate() const {
    if (n_taps < 1 || n_taps % 2 == 0) throw ParameterError("equalizer tap count must be odd and positive");
    if (!(mu_lms > 0) || !(mu_cma > 0)) throw ParameterError("equalizer step sizes must be positive");
    if (training_symbols < 10 * n_taps) throw ParameterError("training must cover at least 10x the tap count");
    if (!(cma_radius > 0)) throw ParameterError("CMA radius must be positive");
    if (lms_epochs < 1) throw ParameterError("LMS needs at least one epoch");
}

void RxConfig::validate() const {
    if (!(baud_hz > 0)) throw ParameterError("receiver baud rate must be positive");
    if (!(prefilter_bw_hz > 0)) throw ParameterError("pre-filter bandwidth must be positive");
    if (!std::isfinite(n_spans) || n_spans < 0) throw ParameterError("span count must be non-negative");
    if (phase_block < 1) throw ParameterError("phase block must be at least one symbol");
    if (boundary_symbols < 0) throw ParameterError("boundary exclusion must be non-negative");
    if (pol_delay_symbols < 0) throw ParameterError("polarization delay must be non-negative");
    span.validate();
    equalizer.validate();
}

DualPolWaveform select_channel(const DualPolWaveform& band, double channel_center_hz, double prefilter_bw_hz,
                               double baud_hz, bool zero_redundant_strips) {
    band.validate();
    if (!(prefilter_bw_hz > 0) || !(baud_hz > 0)) throw ParameterError("pre-filter and baud must be positive");
    const double fs = band.sample_rate_hz();
    if (std::abs(channel_center_hz) >= fs / 2) throw ParameterError("channel centre outside the simulated band");
    const Index n = band.size();
    const double out_rate = 2 * baud_hz;
    const double m_real = static_cast<double>(n) * out_rate / fs;
    const auto m = static_cast<Index>(std::llround(m_real));
    if (std::abs(m_real - static_cast<double>(m)) > 1e-6 || m < 2 || m > n)
        throw ParameterError("record length does not map to an integer 2 Sa/Symb length");
    const Index k0 = static_cast<Index>(std::llround(channel_center_hz * static_cast<double>(n) / fs));

    auto one = [&](const ComplexWaveform& p) {
        const ComplexVector<double> s = fft(p.samples);
        ComplexVector<double> t(n);
        for (Index k = 0; k < n; ++k) {
            const double f = bin_frequency<double>(k, n, fs);
            const bool pass = std::abs(f) <= prefilter_bw_hz / 2 && (!zero_redundant_strips || std::abs(f) <= baud_hz / 2);
            t[k] = pass ? s[mod(k + k0, n)] : std::complex<double>(0);
        }
        ComplexVector<double> out = ifft(resize_spectrum(t, m));
        out *= static_cast<double>(m) / static_cast<double>(n);
        return ComplexWaveform(std::move(out), out_rate);
    };
    return {one(band.x), one(band.y)};
}

DualPolWaveform normalize_power(const DualPolWaveform& w) {
    return w.map([](const ComplexWaveform& p) {
        const double pw = p.mean_power();
        if (!(pw > 0)) throw EstimationError("cannot normalize a zero-power polarization");
        return ComplexWaveform(p.samples / std::sqrt(pw), p.sample_rate_hz);
    });
}

double estimate_cfo(const DualPolWaveform& w, double baud_hz) {
    w.validate();
    const Index n = w.size();
    const double fs = w.sample_rate_hz();
    RealVector<double> p = fft(ComplexVector<double>(w.x.samples.array().pow(4).matrix())).cwiseAbs2();
    p += fft(ComplexVector<double>(w.y.samples.array().pow(4).matrix())).cwiseAbs2();
    const double limit = std::min(baud_hz / 2, fs / 2);  // on 4 x offset
    Index best = -1;
    double peak = -1, sum = 0;
    Index count = 0;
    for (Index k = 0; k < n; ++k) {
        const double f = bin_frequency<double>(k, n, fs);
        if (std::abs(f) > limit) continue;
        sum += p[k];
        ++count;
        if (p[k] > peak) {
            peak = p[k];
            best = k;
        }
    }
    if (best < 0 || count < 3) throw EstimationError("CFO search range holds too few bins");
    const double mean = sum / static_cast<double>(count);
    if (!(peak > 3.981 * mean)) throw EstimationError("no dominant fourth-power spectral line (peak/mean < 6 dB)");
    const double a = std::sqrt(p[mod(best - 1, n)]), b = std::sqrt(peak), c = std::sqrt(p[mod(best + 1, n)]);
    const double den = a - 2 * b + c;
    const double delta = den != 0 ? 0.5 * (a - c) / den : 0.0;
    const double f4 = (static_cast<double>(best < (n + 1) / 2 ? best : best - n) + delta) * fs / static_cast<double>(n);
    return f4 / 4;
}

double dispersion_memory_samples(const SpanConfig& span, double n_spans, double sample_rate_hz) {
    const double beta = std::abs(n_spans * span.quadratic_phase_s2());
    return beta * sample_rate_hz * sample_rate_hz / kPi;
}

DualPolWaveform compensate_dispersion_full(const DualPolWaveform& w, const SpanConfig& span, double n_spans) {
    if (n_spans == 0) return w;
    return apply_filter(w, dispersion_response(span, -n_spans));
}

DualPolWaveform compensate_dispersion(const DualPolWaveform& w, const SpanConfig& span, double n_spans, Index block) {
    w.validate();
    span.validate();
    if (n_spans == 0 || span.quadratic_phase_s2() == 0) return w;
    const double fs = w.sample_rate_hz();
    const Index n = w.size();
    const auto memory = static_cast<Index>(std::ceil(dispersion_memory_samples(span, n_spans, fs)));
    if (block == 0) block = next_pow2(std::max<Index>(4 * memory, 64));
    if (block < memory) throw ParameterError("OLA block shorter than the dispersion memory");
    if (block % 2 != 0) throw ParameterError("OLA block must be even");
    if (block >= n) return compensate_dispersion_full(w, span, n_spans);
    const Index hop = block / 2;
    if (n % hop != 0) throw ParameterError("record length must be a multiple of half the OLA block");

    const Index nfft = next_pow2(block + 2 * memory + 2);
    const Index pad = (nfft - block) / 2;
    RealVector<double> window(block);
    for (Index i = 0; i < block; ++i)
        window[i] = 0.5 - 0.5 * std::cos(2 * kPi * static_cast<double>(i) / static_cast<double>(block));
    const FrequencyResponse h = dispersion_response(span, -n_spans);
    ComplexVector<double> hk(nfft);
    for (Index k = 0; k < nfft; ++k) hk[k] = h(bin_frequency<double>(k, nfft, fs));

    auto one = [&](const ComplexWaveform& p) {
        ComplexVector<double> out = ComplexVector<double>::Zero(n);
        ComplexVector<double> buf(nfft);
        for (Index s = 0; s < n; s += hop) {
            buf.setZero();
            for (Index i = 0; i < block; ++i) buf[pad + i] = p.samples[(s + i) % n] * window[i];
            const ComplexVector<double> y = ifft(ComplexVector<double>(fft(buf).cwiseProduct(hk)));
            for (Index i = 0; i < nfft; ++i) out[mod(s - pad + i, n)] += y[i];
        }
        return ComplexWaveform(std::move(out), fs);
    };
    return {one(w.x), one(w.y)};
}

SyncResult synchronize(const DualPolWaveform& w, const SymbolFrame& frame, Index pol_delay_symbols) {
    w.validate();
    const Index n_sym = frame.size();
    if (w.size() != 2 * n_sym) throw ParameterError("synchronize expects 2 Sa/Symb over one frame period");
    const Index ntr = frame.training_size();
    const Index d = mod(pol_delay_symbols, n_sym);

    ComplexVector<double> t = ComplexVector<double>::Zero(n_sym);
    t.head(ntr) = frame.training_symbols;
    const ComplexVector<double> tf = fft(t).conjugate();

    std::array<RealVector<double>, 2> metric;
    for (int ph = 0; ph < 2; ++ph) {
        RealVector<double> c = RealVector<double>::Zero(n_sym);
        for (const auto* pol : {&w.x, &w.y}) {
            ComplexVector<double> dec(n_sym);
            for (Index k = 0; k < n_sym; ++k) dec[k] = pol->samples[2 * k + ph];
            c += ifft(ComplexVector<double>(fft(dec).cwiseProduct(tf))).cwiseAbs2();
        }
        RealVector<double> s(n_sym);
        for (Index l = 0; l < n_sym; ++l) s[l] = std::min(c[l], c[(l + d) % n_sym]);
        metric[static_cast<std::size_t>(ph)] = std::move(s);
    }
    SyncResult r;
    double best = -1;
    for (int ph = 0; ph < 2; ++ph) {
        Index l;
        const double v = metric[static_cast<std::size_t>(ph)].maxCoeff(&l);
        if (v > best) {
            best = v;
            r.lag = l;
            r.phase = ph;
        }
    }
    const RealVector<double>& m = metric[static_cast<std::size_t>(r.phase)];
    double second = 0;
    for (Index l = 0; l < n_sym; ++l) {
        const Index dist = std::min(mod(l - r.lag, n_sym), mod(r.lag - l, n_sym));
        if (dist > 1) second = std::max(second, m[l]);
    }
    r.lag_y = (r.lag + d) % n_sym;
    r.ratio_db = second > 0 ? 10 * std::log10(best / second) : 300.0;
    if (!(r.ratio_db >= 3.0))
        throw SyncError("pattern synchronization failed: peak-to-second ratio " + std::to_string(r.ratio_db) + " dB");
    return r;
}

EqualizedSymbols equalize(const DualPolWaveform& w, const EqualizerConfig& cfg, const SymbolFrame& frame,
                          const SyncResult& sync) {
    cfg.validate();
    w.validate();
    const Index n_sym = frame.size();
    const Index n = w.size();
    if (n != 2 * n_sym) throw ParameterError("equalizer expects 2 Sa/Symb over one frame period");
    const Index ntr = std::min(cfg.training_symbols, frame.training_size());
    if (ntr < 10 * cfg.n_taps) throw ParameterError("frame training shorter than the equalizer requirement");
    const Index dy = mod(sync.lag_y - sync.lag, n_sym);
    if (dy + ntr > n_sym) throw ParameterError("Y training does not fit in the frame");
    const Index taps = cfg.n_taps;
    const Index half = taps / 2;
    const Index shift = 2 * sync.lag + sync.phase;

    // Circularly extended, frame-aligned inputs: ext[2k + i] is tap i of symbol k.
    auto extend = [&](const ComplexWaveform& p) {
        ComplexVector<double> e(n + taps);
        for (Index i = 0; i < n + taps; ++i) e[i] = p.samples[mod(i - half + shift, n)];
        return e;
    };
    const ComplexVector<double> ux = extend(w.x);
    const ComplexVector<double> uy = extend(w.y);

    ComplexVector<double> wxx = ComplexVector<double>::Zero(taps), wxy = wxx, wyx = wxx, wyy = wxx;
    wxx[half] = 1;
    wyy[half] = 1;

    const auto& tr = frame.training_symbols;
    for (int epoch = 0; epoch < cfg.lms_epochs; ++epoch) {
        for (Index k = 0; k < dy + ntr; ++k) {
            const auto sx = ux.segment(2 * k, taps);
            const auto sy = uy.segment(2 * k, taps);
            if (k < ntr) {
                const std::complex<double> e = tr[k] - (wxx.dot(sx) + wxy.dot(sy));
                wxx += cfg.mu_lms * std::conj(e) * sx;
                wxy += cfg.mu_lms * std::conj(e) * sy;
            }
            if (k >= dy) {
                const std::complex<double> e = tr[k - dy] - (wyx.dot(sx) + wyy.dot(sy));
                wyx += cfg.mu_lms * std::conj(e) * sx;
                wyy += cfg.mu_lms * std::conj(e) * sy;
            }
        }
    }

    EqualizedSymbols out;
    out.x.resize(n_sym);
    out.y.resize(n_sym);
    const double r2 = cfg.cma_radius * cfg.cma_radius;
    for (int pass = 0; pass < 2; ++pass) {
        for (Index k = 0; k < n_sym; ++k) {
            const auto sx = ux.segment(2 * k, taps);
            const auto sy = uy.segment(2 * k, taps);
            const std::complex<double> yx = wxx.dot(sx) + wxy.dot(sy);
            const std::complex<double> yy = wyx.dot(sx) + wyy.dot(sy);
            if (pass == 1) {
                out.x[k] = yx;
                out.y[k] = yy;
            }
            const std::complex<double> ex = yx * (r2 - std::norm(yx));
            const std::complex<double> ey = yy * (r2 - std::norm(yy));
            wxx += cfg.mu_cma * std::conj(ex) * sx;
            wxy += cfg.mu_cma * std::conj(ex) * sy;
            wyx += cfg.mu_cma * std::conj(ey) * sx;
            wyy += cfg.mu_cma * std::conj(ey) * sy;
        }
    }
    const double nx = out.x.norm(), ny = out.y.norm();
    out.output_correlation = (nx > 0 && ny > 0) ? std::abs(out.x.dot(out.y)) / (nx * ny) : 1.0;
    if (out.output_correlation > 0.9)
        throw EqualizerCollapse("equalizer outputs converged to the same tributary");
    return out;
}

SymbolVector estimate_phase(const SymbolVector& symbols, const SymbolVector& pilots, Index pilot_start,
                            Index block_len) {
    const Index n = symbols.size();
    if (n < 1) throw ParameterError("no symbols to phase-correct");
    if (block_len < 1) throw ParameterError("phase block must be at least one symbol");
    const Index np = std::min<Index>(pilots.size(), n);
    pilot_start = mod(pilot_start, n);
    auto pilot_at = [&](Index k) -> const std::complex<double>* {
        const Index off = mod(k - pilot_start, n);
        return off < np ? &pilots[off] : nullptr;
    };
    const Index nb = (n + block_len - 1) / block_len;
    std::vector<double> phi(static_cast<std::size_t>(nb), 0.0);
    const Index b0 = pilot_start / block_len;
    double prev = 0;
    for (Index j = 0; j < nb; ++j) {
        const Index b = (b0 + j) % nb;
        const Index lo = b * block_len, hi = std::min(n, lo + block_len);
        std::complex<double> acc = 0;
        const std::complex<double> derot = std::polar(1.0, -prev);
        for (Index k = lo; k < hi; ++k) {
            if (const auto* p = pilot_at(k)) {
                acc += symbols[k] * std::conj(*p);
            } else if (j > 0) {
                acc += symbols[k] * std::conj(qpsk_decide(symbols[k] * derot));
            }
        }
        const double est = std::abs(acc) > 0 ? prev + wrap_phase(std::arg(acc) - prev) : prev;
        phi[static_cast<std::size_t>(b)] = est;
        prev = est;
    }

    auto centre = [&](Index b) {
        const Index lo = b * block_len, hi = std::min(n, lo + block_len);
        return 0.5 * static_cast<double>(lo + hi - 1);
    };
    SymbolVector out(n);
    for (Index k = 0; k < n; ++k) {
        const Index b = k / block_len;
        const double ck = centre(b);
        Index b1, b2;
        if (static_cast<double>(k) >= ck) {
            b1 = b;
            b2 = (b + 1) % nb;
        } else {
            b1 = (b + nb - 1) % nb;
            b2 = b;
        }
        double c1 = centre(b1), c2 = centre(b2);
        double pos = static_cast<double>(k);
        if (c2 < c1) {  // wraps around the record end
            if (pos < c1) pos += static_cast<double>(n);
            c2 += static_cast<double>(n);
        }
        const double p1 = phi[static_cast<std::size_t>(b1)];
        const double p2 = p1 + wrap_phase(phi[static_cast<std::size_t>(b2)] - p1);
        const double t = c2 > c1 ? (pos - c1) / (c2 - c1) : 0.0;
        out[k] = symbols[k] * std::polar(1.0, -(p1 + t * (p2 - p1)));
    }
    return out;
}

RxResult count_errors(const SymbolVector& out_a, const SymbolVector& out_b, const SymbolFrame& frame,
                      Index pol_delay_symbols, Index boundary_symbols) {
    const Index n = frame.size();
    if (out_a.size() != n || out_b.size() != n) throw ParameterError("symbol streams must span one frame");
    const Index ntr = frame.training_size();
    const Index dy = mod(pol_delay_symbols, n);
    const std::array<Index, 2> start{0, dy};
    const std::array<const SymbolVector*, 2> outs{&out_a, &out_b};

    // score[o][t] = normalized training correlation of output o with tributary t.
    std::array<std::array<std::complex<double>, 2>, 2> corr{};
    std::array<std::array<double, 2>, 2> score{};
    for (std::size_t o = 0; o < 2; ++o)
        for (std::size_t t = 0; t < 2; ++t) {
            std::complex<double> c = 0;
            double e = 0;
            for (Index k = 0; k < ntr; ++k) {
                const auto r = (*outs[o])[(start[t] + k) % n];
                c += r * std::conj(frame.training_symbols[k]);
                e += std::norm(r);
            }
            corr[o][t] = c;
            score[o][t] = e > 0 ? std::abs(c) / std::sqrt(e * static_cast<double>(ntr)) : 0.0;
        }
    const bool swap = score[0][1] + score[1][0] > score[0][0] + score[1][1];
    const std::array<std::size_t, 2> trib_of{swap ? 1U : 0U, swap ? 0U : 1U};

    RxResult res;
    res.symbols_x = swap ? out_b : out_a;
    res.symbols_y = swap ? out_a : out_b;
    const Index n_payload = frame.payload_symbols.size();
    for (std::size_t o = 0; o < 2; ++o) {
        const std::size_t t = trib_of[o];
        if (score[o][t] < 0.3)
            throw CountingError("training correlation too weak to resolve the phase ambiguity");
        const int q = static_cast<int>(std::lround(std::arg(corr[o][t]) / (kPi / 2))) & 3;
        const std::complex<double> rot = std::polar(1.0, -q * kPi / 2);
        for (Index p = 0; p < n_payload; ++p) {
            const Index pos = (ntr + p + start[t]) % n;
            if (pos < boundary_symbols || pos >= n - boundary_symbols) continue;
            const auto [b0, b1] = qpsk_demap((*outs[o])[pos] * rot);
            res.bit_errors += (b0 != frame.bits[static_cast<std::size_t>(2 * p)]) +
                              (b1 != frame.bits[static_cast<std::size_t>(2 * p + 1)]);
            res.bits_counted += 2;
        }
    }
    if (res.bits_counted == 0) throw CountingError("no payload bits left after boundary exclusion");
    res.ber = static_cast<double>(res.bit_errors) / static_cast<double>(res.bits_counted);
    return res;
}

RxResult receive(const DualPolWaveform& band, const SymbolFrame& frame, const RxConfig& cfg) {
    cfg.validate();
    DualPolWaveform w = normalize_power(
        select_channel(band, cfg.channel_center_hz, cfg.prefilter_bw_hz, cfg.baud_hz, cfg.zero_redundant_strips));
    // Dispersion smears the fourth-power line, so it is undone first.
    w = compensate_dispersion(w, cfg.span, cfg.n_spans, cfg.ola_block);
    double cfo = 0;
    if (cfg.correct_cfo) {
        cfo = estimate_cfo(w, cfg.baud_hz);
        // Bin-snapped so the record stays periodic; the sub-bin residue is
        // left to the phase estimator.
        w = frequency_shift(w, -cfo);
    }
    const SyncResult sync = synchronize(w, frame, cfg.pol_delay_symbols);
    const EqualizedSymbols eq = equalize(w, cfg.equalizer, frame, sync);
    const SymbolVector px = estimate_phase(eq.x, frame.training_symbols, 0, cfg.phase_block);
    const SymbolVector py = estimate_phase(eq.y, frame.training_symbols, sync.lag_y - sync.lag, cfg.phase_block);
    RxResult res = count_errors(px, py, frame, cfg.pol_delay_symbols, cfg.boundary_symbols);
    res.cfo_hz = cfo;
    res.sync_lag = sync.lag;
    res.sync_ratio_db = sync.ratio_db;
    return res;
}

} // namespace cwdm

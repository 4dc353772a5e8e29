#include <cwdm/metrics.hpp>

#include <cwdm/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cwdm {

double erfc_inv(double y) {
    if (!(y > 0 && y < 2)) throw DomainError("erfc_inv argument must lie in (0, 2)");
    if (y == 1) return 0;
    // Start from a Gaussian-tail guess, then Newton on erfc(x) - y.
    const double t = std::min(y, 2 - y);
    double x = std::sqrt(-std::log(t / 2)) * 0.9;
    if (y > 1) x = -x;
    const double k = 2 / std::sqrt(std::numbers::pi);
    for (int i = 0; i < 100; ++i) {
        const double f = std::erfc(x) - y;
        const double df = -k * std::exp(-x * x);
        const double step = f / df;
        x -= step;
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

double ber_to_q2_db(double ber) {
    if (!(ber > 0 && ber < 0.5)) throw DomainError("BER must lie in (0, 0.5)");
    const double q = std::numbers::sqrt2 * erfc_inv(2 * ber);
    return 20 * std::log10(q);
}

double q2_db_to_ber(double q2_db) {
    if (!std::isfinite(q2_db)) throw DomainError("Q^2 must be finite");
    const double q = std::pow(10.0, q2_db / 20);
    return 0.5 * std::erfc(q / std::numbers::sqrt2);
}

double psd_ratio_db(double osnr_db, double signal_bw_hz, double ref_bw_hz) {
    if (!(signal_bw_hz > 0) || !(ref_bw_hz > 0)) throw ParameterError("bandwidths must be positive");
    if (signal_bw_hz == ref_bw_hz) return osnr_db;
    return osnr_db - 10 * std::log10(signal_bw_hz / ref_bw_hz);
}

double required_osnr(std::vector<std::pair<double, double>> curve, const FecThreshold& threshold) {
    if (curve.size() < 2) throw RangeError("need at least two points to interpolate");
    std::sort(curve.begin(), curve.end());
    const double t = threshold.q2_db;
    for (const auto& [x, q] : curve)
        if (q == t) return x;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        const auto [x0, q0] = curve[i];
        const auto [x1, q1] = curve[i + 1];
        if (!std::isfinite(q0) || !std::isfinite(q1)) continue;
        if ((q0 - t) * (q1 - t) < 0) return x0 + (t - q0) * (x1 - x0) / (q1 - q0);
    }
    throw RangeError("threshold is not straddled by the curve");
}

int nodes_reached(const std::vector<double>& per_pass_q2, const FecThreshold& threshold) {
    int k = 0;
    for (double q : per_pass_q2) {
        if (!(q >= threshold.q2_db)) break;
        ++k;
    }
    return k;
}

} // namespace cwdm

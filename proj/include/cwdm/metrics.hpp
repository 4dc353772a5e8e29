#ifndef CWDM_METRICS_HPP
#define CWDM_METRICS_HPP

// BER <-> Q^2 conversion, spectral-density ratio, required OSNR and
// nodes-reached bookkeeping.

#include <string_view>
#include <utility>
#include <vector>

namespace cwdm {

struct FecThreshold {
    double q2_db = 8.56;
    std::string_view name = "7% HD-FEC";
};

inline constexpr FecThreshold kHdFec7{};

/// erfc^-1 on (0, 2), Newton iteration on std::erfc.
double erfc_inv(double y);

/// Q = sqrt2 erfc^-1(2 BER), returned as 20 log10 Q. BER must lie in (0, 0.5).
double ber_to_q2_db(double ber);
double q2_db_to_ber(double q2_db);

/// osnr - 10 log10(signal_bw / ref_bw).
double psd_ratio_db(double osnr_db, double signal_bw_hz, double ref_bw_hz = 12.5e9);

/// Linear interpolation of (x, q2) at the threshold, over the first straddling
/// pair after sorting by x.
double required_osnr(std::vector<std::pair<double, double>> curve, const FecThreshold& threshold = kHdFec7);

/// Largest k with q2[i] >= threshold for every i < k.
int nodes_reached(const std::vector<double>& per_pass_q2, const FecThreshold& threshold = kHdFec7);

} // namespace cwdm

#endif // CWDM_METRICS_HPP

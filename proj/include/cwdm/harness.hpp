#ifndef CWDM_HARNESS_HPP
#define CWDM_HARNESS_HPP

// Experiment runners (back-to-back, detuning, multi-pass), CSV emission and
// per-point summaries pooled over seeds.

#include <cwdm/config.hpp>
#include <cwdm/metrics.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cwdm {

inline constexpr const char* kCsvHeader =
    "experiment,baud_gbd,mode,osnr_db,psd_ratio_db,detuning_ghz,pass_index,ber,q2_db,seed,config_hash";

struct ResultRow {
    std::string experiment;  // b2b, detuning, multipass-adddrop, multipass-allpass
    double baud_hz = 0;
    Shaping mode = Shaping::Nyquist;
    double osnr_db = 0;
    double psd_ratio_db = 0;
    double detuning_hz = 0;
    int pass_index = 0;
    double ber = 0;
    double q2_db = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    long long bit_errors = 0;
    long long bits_counted = 0;
    std::string failure;  // empty on success

    bool ok() const { return failure.empty(); }
};

/// Q^2 for a counted BER: +inf with no errors, nan if the BER is 0.5 or more.
double q2_from_counts(long long errors, long long bits);

std::vector<ResultRow> run_back_to_back(const ExperimentConfig& cfg);
std::vector<ResultRow> run_detuning(const ExperimentConfig& cfg);
std::vector<ResultRow> run_multipass(const ExperimentConfig& cfg);
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

std::string format_results(const std::vector<ResultRow>& rows);
void emit_results(const std::vector<ResultRow>& rows, const std::string& path);

/// Errors and bits summed over seeds for one sweep point.
struct PooledPoint {
    std::string experiment;
    double baud_hz = 0;
    Shaping mode = Shaping::Nyquist;
    double osnr_db = 0;
    double detuning_hz = 0;
    int pass_index = 0;
    long long bit_errors = 0;
    long long bits_counted = 0;
    int failures = 0;
    double q2_min = 0, q2_max = 0;  // across seeds

    double ber() const;
    double q2_db() const;
};

std::vector<PooledPoint> pool_over_seeds(const std::vector<ResultRow>& rows);

struct BackToBackSummary {
    double baud_hz = 0;
    Shaping mode = Shaping::Nyquist;
    std::optional<double> required_osnr_db;
    std::optional<double> required_psd_ratio_db;
};

std::vector<BackToBackSummary> summarize_back_to_back(const std::vector<ResultRow>& rows,
                                                      const ExperimentConfig& cfg);

/// Pooled Q^2 of one (experiment, baud, mode) series, indexed by detuning or pass.
double pooled_q2(const std::vector<PooledPoint>& pooled, const std::string& experiment, double baud_hz,
                 Shaping mode, double detuning_hz, int pass_index);

std::string format_summary(const std::vector<ResultRow>& rows, const ExperimentConfig& cfg);

} // namespace cwdm

#endif // CWDM_HARNESS_HPP

#ifndef CWDM_CONFIG_HPP
#define CWDM_CONFIG_HPP

// Experiment configuration and its INI representation.

#include <cwdm/channel.hpp>
#include <cwdm/rxdsp.hpp>
#include <cwdm/txgen.hpp>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace cwdm {

enum class ExperimentKind { BackToBack, Detuning, MultiPass };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment(std::string_view text);
std::string_view to_string(NodeMode m);
NodeMode parse_node_mode(std::string_view text);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::BackToBack;
    std::vector<double> baud_list_hz{40e9, 42.5e9, 45e9, 47.5e9};
    std::vector<Shaping> modes{Shaping::Nyquist, Shaping::Cyclic};
    std::vector<double> osnr_grid_db{11, 12, 13, 14, 15, 16, 17, 18};
    bool noiseless_control = true;
    std::vector<double> detuning_grid_hz{-5e9, -4e9, -3e9, -2e9, -1e9, 0, 1e9, 2e9, 3e9, 4e9, 5e9};
    double detuning_osnr_db = 18.5;
    int max_passes = 6;
    std::vector<NodeMode> node_modes{NodeMode::AddDrop, NodeMode::AllPass};
    double multipass_osnr_db = 16.0;
    double per_pass_osnr_db = std::numeric_limits<double>::infinity();  // inf disables the per-pass hook
    Index n_symbols = 1 << 16;
    Index n_training = 4096;
    int n_seeds = 4;
    std::uint64_t base_seed = 1;
    int threads = 1;

    // Transmitter
    double roll_off = 0.01;
    double grid_hz = 50e9;
    double band_center_hz = 193.075e12;
    double target_center_hz = 193.1e12;
    int samples_per_symbol = kSimSamplesPerSymbol;
    Index pol_delay_symbols = kDefaultPolDecorrelationSymbols;

    // Link
    WssFilterModel wss{};
    double express_delay_symbols = 128;
    bool express_enabled = true;
    SpanConfig span{};

    // Receiver
    double prefilter_bw_hz = 60e9;
    EqualizerConfig equalizer{};
    Index phase_block = 64;
    Index boundary_symbols = 1024;
    Index ola_block = 0;
    bool correct_cfo = true;
    bool zero_redundant_strips = false;

    void validate() const;
};

/// Parse INI text. Unknown sections or keys raise ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Every resolved setting as sorted key = value lines; hashed into result rows.
std::string canonical_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

/// 2^14 symbols, one seed, two OSNR points.
void apply_smoke_profile(ExperimentConfig& cfg);

} // namespace cwdm

#endif // CWDM_CONFIG_HPP

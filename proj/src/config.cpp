#include <cwdm/config.hpp>

#include <cwdm/random.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cwdm {

namespace pt = boost::property_tree;

std::string_view to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::BackToBack: return "b2b";
    case ExperimentKind::Detuning: return "detuning";
    case ExperimentKind::MultiPass: return "multipass";
    }
    return "?";
}

ExperimentKind parse_experiment(std::string_view text) {
    if (text == "b2b") return ExperimentKind::BackToBack;
    if (text == "detuning") return ExperimentKind::Detuning;
    if (text == "multipass") return ExperimentKind::MultiPass;
    throw ConfigError("unknown experiment '" + std::string(text) + "' (expected b2b, detuning or multipass)");
}

std::string_view to_string(NodeMode m) { return m == NodeMode::AllPass ? "allpass" : "adddrop"; }

NodeMode parse_node_mode(std::string_view text) {
    if (text == "allpass") return NodeMode::AllPass;
    if (text == "adddrop") return NodeMode::AddDrop;
    throw ConfigError("unknown node mode '" + std::string(text) + "' (expected allpass or adddrop)");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + t + "' is not a number");
    }
}

long long to_integer(const std::string& key, const std::string& text) {
    const double v = to_double(key, text);
    if (!std::isfinite(v) || v != std::floor(v)) throw ConfigError("key '" + key + "': expected an integer");
    return static_cast<long long>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("key '" + key + "': '" + t + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

/// "a, b, c" or "start:step:stop" (inclusive).
std::vector<double> to_list(const std::string& key, const std::string& text, double scale) {
    std::vector<double> out;
    const std::string t = trim(text);
    if (std::count(t.begin(), t.end(), ':') == 2) {
        const auto p1 = t.find(':'), p2 = t.rfind(':');
        const double a = to_double(key, t.substr(0, p1));
        const double step = to_double(key, t.substr(p1 + 1, p2 - p1 - 1));
        const double b = to_double(key, t.substr(p2 + 1));
        if (!(step > 0) || b < a) throw ConfigError("key '" + key + "': range needs a positive step and stop >= start");
        const auto n = static_cast<long long>(std::floor((b - a) / step + 1e-9));
        for (long long i = 0; i <= n; ++i) out.push_back((a + static_cast<double>(i) * step) * scale);
    } else {
        for (const auto& item : split_list(t)) out.push_back(to_double(key, item) * scale);
    }
    if (out.empty()) throw ConfigError("key '" + key + "': list is empty");
    return out;
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> m;
        // [experiment]
        m["experiment.type"] = [](auto& c, auto& v) { c.experiment = parse_experiment(trim(v)); };
        m["experiment.baud_gbd"] = [](auto& c, auto& v) { c.baud_list_hz = to_list("experiment.baud_gbd", v, 1e9); };
        m["experiment.modes"] = [](auto& c, auto& v) {
            c.modes.clear();
            for (const auto& s : split_list(v)) {
                try {
                    c.modes.push_back(parse_shaping(s));
                } catch (const ParameterError& e) {
                    throw ConfigError(std::string("key 'experiment.modes': ") + e.what());
                }
            }
            if (c.modes.empty()) throw ConfigError("key 'experiment.modes': list is empty");
        };
        m["experiment.osnr_db"] = [](auto& c, auto& v) { c.osnr_grid_db = to_list("experiment.osnr_db", v, 1.0); };
        m["experiment.noiseless_control"] = [](auto& c, auto& v) {
            c.noiseless_control = to_bool("experiment.noiseless_control", v);
        };
        m["experiment.detuning_ghz"] = [](auto& c, auto& v) {
            c.detuning_grid_hz = to_list("experiment.detuning_ghz", v, 1e9);
        };
        m["experiment.detuning_osnr_db"] = [](auto& c, auto& v) {
            c.detuning_osnr_db = to_double("experiment.detuning_osnr_db", v);
        };
        m["experiment.max_passes"] = [](auto& c, auto& v) {
            c.max_passes = static_cast<int>(to_integer("experiment.max_passes", v));
        };
        m["experiment.node_modes"] = [](auto& c, auto& v) {
            c.node_modes.clear();
            for (const auto& s : split_list(v)) c.node_modes.push_back(parse_node_mode(s));
            if (c.node_modes.empty()) throw ConfigError("key 'experiment.node_modes': list is empty");
        };
        m["experiment.multipass_osnr_db"] = [](auto& c, auto& v) {
            c.multipass_osnr_db = to_double("experiment.multipass_osnr_db", v);
        };
        m["experiment.per_pass_osnr_db"] = [](auto& c, auto& v) {
            c.per_pass_osnr_db = to_double("experiment.per_pass_osnr_db", v);
        };
        m["experiment.n_symbols"] = [](auto& c, auto& v) { c.n_symbols = to_integer("experiment.n_symbols", v); };
        m["experiment.n_training"] = [](auto& c, auto& v) { c.n_training = to_integer("experiment.n_training", v); };
        m["experiment.seeds"] = [](auto& c, auto& v) { c.n_seeds = static_cast<int>(to_integer("experiment.seeds", v)); };
        m["experiment.seed"] = [](auto& c, auto& v) {
            const long long s = to_integer("experiment.seed", v);
            if (s < 0) throw ConfigError("key 'experiment.seed': must be non-negative");
            c.base_seed = static_cast<std::uint64_t>(s);
        };
        m["experiment.threads"] = [](auto& c, auto& v) { c.threads = static_cast<int>(to_integer("experiment.threads", v)); };
        // [tx]
        m["tx.roll_off"] = [](auto& c, auto& v) { c.roll_off = to_double("tx.roll_off", v); };
        m["tx.grid_ghz"] = [](auto& c, auto& v) { c.grid_hz = to_double("tx.grid_ghz", v) * 1e9; };
        m["tx.band_center_thz"] = [](auto& c, auto& v) { c.band_center_hz = to_double("tx.band_center_thz", v) * 1e12; };
        m["tx.target_thz"] = [](auto& c, auto& v) { c.target_center_hz = to_double("tx.target_thz", v) * 1e12; };
        m["tx.samples_per_symbol"] = [](auto& c, auto& v) {
            c.samples_per_symbol = static_cast<int>(to_integer("tx.samples_per_symbol", v));
        };
        m["tx.pol_delay_symbols"] = [](auto& c, auto& v) {
            c.pol_delay_symbols = to_integer("tx.pol_delay_symbols", v);
        };
        // [channel]
        m["channel.wss_bandwidth_ghz"] = [](auto& c, auto& v) {
            c.wss.bandwidth_3db_hz = to_double("channel.wss_bandwidth_ghz", v) * 1e9;
        };
        m["channel.wss_edge_fwhm_ghz"] = [](auto& c, auto& v) {
            c.wss.edge_fwhm_hz = to_double("channel.wss_edge_fwhm_ghz", v) * 1e9;
        };
        m["channel.express_delay_symbols"] = [](auto& c, auto& v) {
            c.express_delay_symbols = to_double("channel.express_delay_symbols", v);
        };
        m["channel.express_enabled"] = [](auto& c, auto& v) {
            c.express_enabled = to_bool("channel.express_enabled", v);
        };
        m["channel.span_length_km"] = [](auto& c, auto& v) {
            c.span.length_m = to_double("channel.span_length_km", v) * 1e3;
        };
        m["channel.dispersion_ps_nm_km"] = [](auto& c, auto& v) {
            c.span.dispersion_ps_nm_km = to_double("channel.dispersion_ps_nm_km", v);
        };
        m["channel.lambda_nm"] = [](auto& c, auto& v) {
            c.span.reference_lambda_m = to_double("channel.lambda_nm", v) / 1e9;
        };
        // [rx]
        m["rx.prefilter_ghz"] = [](auto& c, auto& v) { c.prefilter_bw_hz = to_double("rx.prefilter_ghz", v) * 1e9; };
        m["rx.taps"] = [](auto& c, auto& v) { c.equalizer.n_taps = to_integer("rx.taps", v); };
        m["rx.mu_lms"] = [](auto& c, auto& v) { c.equalizer.mu_lms = to_double("rx.mu_lms", v); };
        m["rx.mu_cma"] = [](auto& c, auto& v) { c.equalizer.mu_cma = to_double("rx.mu_cma", v); };
        m["rx.lms_epochs"] = [](auto& c, auto& v) {
            c.equalizer.lms_epochs = static_cast<int>(to_integer("rx.lms_epochs", v));
        };
        m["rx.cma_radius"] = [](auto& c, auto& v) { c.equalizer.cma_radius = to_double("rx.cma_radius", v); };
        m["rx.phase_block"] = [](auto& c, auto& v) { c.phase_block = to_integer("rx.phase_block", v); };
        m["rx.boundary_symbols"] = [](auto& c, auto& v) { c.boundary_symbols = to_integer("rx.boundary_symbols", v); };
        m["rx.ola_block"] = [](auto& c, auto& v) { c.ola_block = to_integer("rx.ola_block", v); };
        m["rx.correct_cfo"] = [](auto& c, auto& v) { c.correct_cfo = to_bool("rx.correct_cfo", v); };
        m["rx.zero_redundant_strips"] = [](auto& c, auto& v) {
            c.zero_redundant_strips = to_bool("rx.zero_redundant_strips", v);
        };
        return m;
    }();
    return table;
}

} // namespace

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (baud_list_hz.empty() || modes.empty() || osnr_grid_db.empty() || detuning_grid_hz.empty() ||
        node_modes.empty())
        fail("every sweep grid must be non-empty");
    for (double b : baud_list_hz)
        if (!(b > 0) || b > grid_hz) fail("baud rates must be positive and no larger than the grid");
    for (double o : osnr_grid_db)
        if (!std::isfinite(o)) fail("OSNR grid values must be finite");
    if (!std::isfinite(detuning_osnr_db) || !std::isfinite(multipass_osnr_db))
        fail("operating OSNRs must be finite");
    if (std::isnan(per_pass_osnr_db)) fail("per-pass OSNR must be a number or inf");
    if (max_passes < 1) fail("max_passes must be at least 1");
    if (n_symbols < (1 << 14)) fail("n_symbols must be at least 2^14 for counting validity");
    if (n_training < 10 * equalizer.n_taps) fail("n_training must be at least 10x the equalizer taps");
    if (n_training + pol_delay_symbols + 2 * boundary_symbols >= n_symbols)
        fail("n_symbols too small for training, polarization delay and boundary exclusion");
    if (n_seeds < 1) fail("seeds must be at least 1");
    if (threads < 1) fail("threads must be at least 1");
    if (samples_per_symbol < 4) fail("samples_per_symbol must be at least 4 to cover the four-channel band");
    if (express_delay_symbols < 0) fail("express delay must be non-negative");
    if (pol_delay_symbols < 0) fail("polarization delay must be non-negative");
    const double slots = (target_center_hz - band_center_hz) / grid_hz;
    if (std::abs(slots - 0.5) > 1e-9 && std::abs(slots + 0.5) > 1e-9 && std::abs(slots - 1.5) > 1e-9 &&
        std::abs(slots + 1.5) > 1e-9)
        fail("target must be one of the four channel slots around the band centre");
    try {
        wss.validate();
        span.validate();
        EqualizerConfig eq = equalizer;
        eq.training_symbols = n_training;
        eq.validate();
        for (double b : baud_list_hz)
            for (Shaping s : modes) {
                TxChannelConfig ch;
                ch.baud_hz = b;
                ch.shaping = s;
                ch.roll_off = roll_off;
                ch.grid_hz = grid_hz;
                ch.validate();
            }
    } catch (const ParameterError& e) {
        fail(e.what());
    }
}

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    ExperimentConfig cfg;
    const auto& table = setters();
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("key '" + section + "' outside any section");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            const auto it = table.find(full);
            if (it == table.end()) throw ConfigError("unknown config key '" + full + "'");
            it->second(cfg, value.get_value<std::string>());
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

std::string canonical_config(const ExperimentConfig& c) {
    std::map<std::string, std::string> kv;
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
        return s;
    };
    kv["experiment.type"] = to_string(c.experiment);
    kv["experiment.baud_hz"] = list(c.baud_list_hz);
    std::string modes;
    for (std::size_t i = 0; i < c.modes.size(); ++i) modes += (i ? "," : "") + std::string(to_string(c.modes[i]));
    kv["experiment.modes"] = modes;
    kv["experiment.osnr_db"] = list(c.osnr_grid_db);
    kv["experiment.noiseless_control"] = c.noiseless_control ? "true" : "false";
    kv["experiment.detuning_hz"] = list(c.detuning_grid_hz);
    kv["experiment.detuning_osnr_db"] = fmt(c.detuning_osnr_db);
    kv["experiment.max_passes"] = std::to_string(c.max_passes);
    std::string nodes;
    for (std::size_t i = 0; i < c.node_modes.size(); ++i)
        nodes += (i ? "," : "") + std::string(to_string(c.node_modes[i]));
    kv["experiment.node_modes"] = nodes;
    kv["experiment.multipass_osnr_db"] = fmt(c.multipass_osnr_db);
    kv["experiment.per_pass_osnr_db"] = fmt(c.per_pass_osnr_db);
    kv["experiment.n_symbols"] = std::to_string(c.n_symbols);
    kv["experiment.n_training"] = std::to_string(c.n_training);
    kv["experiment.seeds"] = std::to_string(c.n_seeds);
    kv["experiment.seed"] = std::to_string(c.base_seed);
    kv["tx.roll_off"] = fmt(c.roll_off);
    kv["tx.grid_hz"] = fmt(c.grid_hz);
    kv["tx.band_center_hz"] = fmt(c.band_center_hz);
    kv["tx.target_hz"] = fmt(c.target_center_hz);
    kv["tx.samples_per_symbol"] = std::to_string(c.samples_per_symbol);
    kv["tx.pol_delay_symbols"] = std::to_string(c.pol_delay_symbols);
    kv["channel.wss_bandwidth_hz"] = fmt(c.wss.bandwidth_3db_hz);
    kv["channel.wss_edge_fwhm_hz"] = fmt(c.wss.edge_fwhm_hz);
    kv["channel.express_delay_symbols"] = fmt(c.express_delay_symbols);
    kv["channel.express_enabled"] = c.express_enabled ? "true" : "false";
    kv["channel.span_length_m"] = fmt(c.span.length_m);
    kv["channel.dispersion_ps_nm_km"] = fmt(c.span.dispersion_ps_nm_km);
    kv["channel.lambda_m"] = fmt(c.span.reference_lambda_m);
    kv["rx.prefilter_hz"] = fmt(c.prefilter_bw_hz);
    kv["rx.taps"] = std::to_string(c.equalizer.n_taps);
    kv["rx.mu_lms"] = fmt(c.equalizer.mu_lms);
    kv["rx.mu_cma"] = fmt(c.equalizer.mu_cma);
    kv["rx.lms_epochs"] = std::to_string(c.equalizer.lms_epochs);
    kv["rx.cma_radius"] = fmt(c.equalizer.cma_radius);
    kv["rx.phase_block"] = std::to_string(c.phase_block);
    kv["rx.boundary_symbols"] = std::to_string(c.boundary_symbols);
    kv["rx.ola_block"] = std::to_string(c.ola_block);
    kv["rx.correct_cfo"] = c.correct_cfo ? "true" : "false";
    kv["rx.zero_redundant_strips"] = c.zero_redundant_strips ? "true" : "false";
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
    return buf;
}

void apply_smoke_profile(ExperimentConfig& cfg) {
    cfg.n_symbols = 1 << 14;
    cfg.n_seeds = 1;
    cfg.osnr_grid_db = {13, 16};
}

} // namespace cwdm

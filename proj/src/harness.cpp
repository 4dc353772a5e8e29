#include <cwdm/harness.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

namespace cwdm {

namespace {

/// Runs jobs 0..n-1 on `threads` workers; output keeps job order.
template <typename Fn>
std::vector<ResultRow> run_jobs(std::size_t n, int threads, Fn&& fn) {
    std::vector<std::vector<ResultRow>> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                results[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto count = static_cast<std::size_t>(std::max(1, threads));
    if (count == 1 || n < 2) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(count, n); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<ResultRow> rows;
    for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

struct Scenario {
    BandConfig band;
    std::size_t target = 0;
    TxBand tx;
    DualPolWaveform field;
};

double target_offset_hz(const ExperimentConfig& cfg) { return cfg.target_center_hz - cfg.band_center_hz; }

Scenario make_scenario(const ExperimentConfig& cfg, double baud, Shaping mode, std::uint64_t seed,
                       double detuning_hz) {
    Scenario s;
    s.band = BandConfig::standard(baud, mode, seed, cfg.roll_off, cfg.grid_hz);
    s.band.band_center_hz = cfg.band_center_hz;
    s.band.dac_rate_hz = cfg.samples_per_symbol * baud;
    const double offset = target_offset_hz(cfg);
    bool found = false;
    for (std::size_t i = 0; i < s.band.channels.size(); ++i)
        if (std::abs(s.band.channels[i].carrier_offset_hz - offset) < 1.0) {
            s.target = i;
            found = true;
        }
    if (!found) throw ConfigError("target frequency is not a channel of the band");
    s.band.channels[s.target].carrier_offset_hz += detuning_hz;
    s.tx = synthesize_band(s.band, cfg.n_symbols - cfg.n_training, cfg.n_training);
    s.field = emulate_polmux(s.tx.band, cfg.pol_delay_symbols, baud, nullptr, cfg.equalizer.n_taps);
    return s;
}

RxConfig make_rx(const ExperimentConfig& cfg, double baud, double carrier_hz, double n_spans) {
    RxConfig rx;
    rx.baud_hz = baud;
    rx.channel_center_hz = carrier_hz;
    rx.prefilter_bw_hz = cfg.prefilter_bw_hz;
    rx.correct_cfo = cfg.correct_cfo;
    rx.span = cfg.span;
    rx.n_spans = n_spans;
    rx.ola_block = cfg.ola_block;
    rx.equalizer = cfg.equalizer;
    rx.equalizer.training_symbols = cfg.n_training;
    rx.phase_block = cfg.phase_block;
    rx.boundary_symbols = cfg.boundary_symbols;
    rx.pol_delay_symbols = cfg.pol_delay_symbols;
    rx.zero_redundant_strips = cfg.zero_redundant_strips;
    return rx;
}

NodeConfig make_node(const ExperimentConfig& cfg, NodeMode mode, double baud) {
    NodeConfig node;
    node.mode = mode;
    node.drop_filter = cfg.wss;
    node.drop_filter.center_hz = target_offset_hz(cfg);
    node.band_center_hz = cfg.band_center_hz;
    node.grid_hz = cfg.grid_hz;
    node.express_delay_s = cfg.express_delay_symbols / baud;
    node.express_enabled = cfg.express_enabled;
    return node;
}

double signal_bandwidth(const ExperimentConfig& cfg, double baud, Shaping mode) {
    return mode == Shaping::Nyquist ? baud : cfg.grid_hz;
}

ResultRow base_row(const ExperimentConfig& cfg, const std::string& experiment, double baud, Shaping mode,
                   double osnr, std::uint64_t seed, const std::string& hash) {
    ResultRow r;
    r.experiment = experiment;
    r.baud_hz = baud;
    r.mode = mode;
    r.osnr_db = osnr;
    r.psd_ratio_db = psd_ratio_db(osnr, signal_bandwidth(cfg, baud, mode));
    r.seed = seed;
    r.config_hash = hash;
    return r;
}

void measure(ResultRow& row, const DualPolWaveform& field, const SymbolFrame& frame, const RxConfig& rx) {
    try {
        const RxResult res = receive(field, frame, rx);
        row.bit_errors = res.bit_errors;
        row.bits_counted = res.bits_counted;
        row.ber = res.ber;
        row.q2_db = q2_from_counts(res.bit_errors, res.bits_counted);
    } catch (const Error& e) {
        row.failure = e.what();
        row.ber = std::numeric_limits<double>::quiet_NaN();
        row.q2_db = std::numeric_limits<double>::quiet_NaN();
    }
}

std::uint64_t seed_of(const ExperimentConfig& cfg, int i) { return cfg.base_seed + static_cast<std::uint64_t>(i); }

void canonical_sort(std::vector<ResultRow>& rows) {
    auto key = [](const ResultRow& r) {
        return std::make_tuple(r.experiment, r.baud_hz, static_cast<int>(r.mode), r.osnr_db, r.detuning_hz,
                               r.pass_index, r.seed);
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) { return key(a) < key(b); });
}

std::string fmt6(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

double q2_from_counts(long long errors, long long bits) {
    if (bits <= 0) return std::numeric_limits<double>::quiet_NaN();
    if (errors == 0) return std::numeric_limits<double>::infinity();
    const double ber = static_cast<double>(errors) / static_cast<double>(bits);
    if (ber >= 0.5) return std::numeric_limits<double>::quiet_NaN();
    return ber_to_q2_db(ber);
}

std::vector<ResultRow> run_back_to_back(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::string hash = config_hash(cfg);
    struct Job {
        double baud;
        Shaping mode;
        int seed_index;
    };
    std::vector<Job> jobs;
    for (double b : cfg.baud_list_hz)
        for (Shaping m : cfg.modes)
            for (int s = 0; s < cfg.n_seeds; ++s) jobs.push_back({b, m, s});
    std::vector<double> osnrs = cfg.osnr_grid_db;
    if (cfg.noiseless_control) osnrs.push_back(std::numeric_limits<double>::infinity());

    auto rows = run_jobs(jobs.size(), cfg.threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        const std::uint64_t seed = seed_of(cfg, job.seed_index);
        const Scenario sc = make_scenario(cfg, job.baud, job.mode, seed, 0);
        const double carrier = sc.band.channels[sc.target].carrier_offset_hz;
        const RxConfig rx = make_rx(cfg, job.baud, carrier, 0);
        std::vector<ResultRow> out;
        for (std::size_t k = 0; k < osnrs.size(); ++k) {
            ResultRow row = base_row(cfg, "b2b", job.baud, job.mode, osnrs[k], seed, hash);
            RandomStream noise(seed, "noise-b2b", k);
            const DualPolWaveform noisy = load_noise(sc.field, osnrs[k], carrier, cfg.grid_hz, noise);
            measure(row, noisy, sc.tx.frames[sc.target], rx);
            out.push_back(std::move(row));
        }
        return out;
    });
    canonical_sort(rows);
    return rows;
}

std::vector<ResultRow> run_detuning(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::string hash = config_hash(cfg);
    struct Job {
        double baud;
        Shaping mode;
        std::size_t det_index;
        int seed_index;
    };
    std::vector<Job> jobs;
    for (double b : cfg.baud_list_hz)
        for (Shaping m : cfg.modes)
            for (std::size_t d = 0; d < cfg.detuning_grid_hz.size(); ++d)
                for (int s = 0; s < cfg.n_seeds; ++s) jobs.push_back({b, m, d, s});

    auto rows = run_jobs(jobs.size(), cfg.threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        const std::uint64_t seed = seed_of(cfg, job.seed_index);
        const double det = cfg.detuning_grid_hz[job.det_index];
        ResultRow row = base_row(cfg, "detuning", job.baud, job.mode, cfg.detuning_osnr_db, seed, hash);
        row.detuning_hz = det;
        row.pass_index = 1;
        const Scenario sc = make_scenario(cfg, job.baud, job.mode, seed, det);
        // The receiver LO follows the detuned laser; the drop filter stays on grid.
        const double carrier = sc.band.channels[sc.target].carrier_offset_hz;
        RandomStream noise(seed, "noise-detuning", job.det_index);
        const DualPolWaveform noisy = load_noise(sc.field, cfg.detuning_osnr_db, carrier, cfg.grid_hz, noise);
        const DualPolWaveform out =
            run_link(noisy, cfg.span, make_node(cfg, NodeMode::AddDrop, job.baud), 1).front();
        measure(row, out, sc.tx.frames[sc.target], make_rx(cfg, job.baud, carrier, 1));
        return std::vector<ResultRow>{row};
    });
    canonical_sort(rows);
    return rows;
}

std::vector<ResultRow> run_multipass(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::string hash = config_hash(cfg);
    struct Job {
        double baud;
        Shaping mode;
        NodeMode node;
        int seed_index;
    };
    std::vector<Job> jobs;
    for (double b : cfg.baud_list_hz)
        for (Shaping m : cfg.modes)
            for (NodeMode n : cfg.node_modes)
                for (int s = 0; s < cfg.n_seeds; ++s) jobs.push_back({b, m, n, s});

    auto rows = run_jobs(jobs.size(), cfg.threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        const std::uint64_t seed = seed_of(cfg, job.seed_index);
        const std::string name = "multipass-" + std::string(to_string(job.node));
        const Scenario sc = make_scenario(cfg, job.baud, job.mode, seed, 0);
        const double carrier = sc.band.channels[sc.target].carrier_offset_hz;
        const SymbolFrame& frame = sc.tx.frames[sc.target];
        RandomStream noise(seed, "noise-multipass", static_cast<std::uint64_t>(job.node));
        DualPolWaveform field = load_noise(sc.field, cfg.multipass_osnr_db, carrier, cfg.grid_hz, noise);

        std::vector<ResultRow> out;
        ResultRow ref = base_row(cfg, name, job.baud, job.mode, cfg.multipass_osnr_db, seed, hash);
        ref.pass_index = 0;
        measure(ref, field, frame, make_rx(cfg, job.baud, carrier, 0));
        out.push_back(ref);

        RandomStream pass_noise(seed, "noise-per-pass", static_cast<std::uint64_t>(job.node));
        PassHook hook;
        if (std::isfinite(cfg.per_pass_osnr_db))
            hook = [&](DualPolWaveform& b, int) {
                b = load_noise(b, cfg.per_pass_osnr_db, carrier, cfg.grid_hz, pass_noise);
            };
        const NodeConfig node = make_node(cfg, job.node, job.baud);
        for (int p = 1; p <= cfg.max_passes; ++p) {
            field = run_link(field, cfg.span, node, 1, hook ? PassHook([&](DualPolWaveform& b, int) { hook(b, p); })
                                                             : PassHook{})
                        .front();
            ResultRow row = base_row(cfg, name, job.baud, job.mode, cfg.multipass_osnr_db, seed, hash);
            row.pass_index = p;
            measure(row, field, frame, make_rx(cfg, job.baud, carrier, p));
            out.push_back(std::move(row));
        }
        return out;
    });
    canonical_sort(rows);
    return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
    case ExperimentKind::BackToBack: return run_back_to_back(cfg);
    case ExperimentKind::Detuning: return run_detuning(cfg);
    case ExperimentKind::MultiPass: return run_multipass(cfg);
    }
    return {};
}

std::string format_results(const std::vector<ResultRow>& rows) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : rows) {
        out += r.experiment + "," + fmt6(r.baud_hz / 1e9) + "," + std::string(to_string(r.mode)) + "," +
               fmt6(r.osnr_db) + "," + fmt6(r.psd_ratio_db) + "," + fmt6(r.detuning_hz / 1e9) + "," +
               std::to_string(r.pass_index) + "," + fmt6(r.ber) + "," + fmt6(r.q2_db) + "," +
               std::to_string(r.seed) + "," + r.config_hash + "\n";
    }
    return out;
}

void emit_results(const std::vector<ResultRow>& rows, const std::string& path) {
    if (rows.empty()) throw ParameterError("no result rows to write");
    const std::string text = format_results(rows);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw Error("write to '" + path + "' failed");
}

double PooledPoint::ber() const {
    return bits_counted > 0 ? static_cast<double>(bit_errors) / static_cast<double>(bits_counted)
                            : std::numeric_limits<double>::quiet_NaN();
}

double PooledPoint::q2_db() const {
    if (failures > 0) return std::numeric_limits<double>::quiet_NaN();
    return q2_from_counts(bit_errors, bits_counted);
}

std::vector<PooledPoint> pool_over_seeds(const std::vector<ResultRow>& rows) {
    std::map<std::tuple<std::string, double, int, double, double, int>, PooledPoint> groups;
    for (const auto& r : rows) {
        const auto key = std::make_tuple(r.experiment, r.baud_hz, static_cast<int>(r.mode), r.osnr_db, r.detuning_hz,
                                         r.pass_index);
        auto [it, fresh] = groups.try_emplace(key);
        PooledPoint& p = it->second;
        if (fresh) {
            p.experiment = r.experiment;
            p.baud_hz = r.baud_hz;
            p.mode = r.mode;
            p.osnr_db = r.osnr_db;
            p.detuning_hz = r.detuning_hz;
            p.pass_index = r.pass_index;
            p.q2_min = std::numeric_limits<double>::infinity();
            p.q2_max = -std::numeric_limits<double>::infinity();
        }
        if (!r.ok()) {
            ++p.failures;
            continue;
        }
        p.bit_errors += r.bit_errors;
        p.bits_counted += r.bits_counted;
        p.q2_min = std::min(p.q2_min, r.q2_db);
        p.q2_max = std::max(p.q2_max, r.q2_db);
    }
    std::vector<PooledPoint> out;
    for (auto& [k, p] : groups) out.push_back(p);
    return out;
}

std::vector<BackToBackSummary> summarize_back_to_back(const std::vector<ResultRow>& rows,
                                                      const ExperimentConfig& cfg) {
    const auto pooled = pool_over_seeds(rows);
    std::vector<BackToBackSummary> out;
    for (double b : cfg.baud_list_hz)
        for (Shaping m : cfg.modes) {
            BackToBackSummary s;
            s.baud_hz = b;
            s.mode = m;
            std::vector<std::pair<double, double>> curve;
            for (const auto& p : pooled)
                if (p.experiment == "b2b" && p.baud_hz == b && p.mode == m && std::isfinite(p.osnr_db)) {
                    const double q = p.q2_db();
                    if (!std::isnan(q)) curve.emplace_back(p.osnr_db, std::isinf(q) ? 99.0 : q);
                }
            try {
                s.required_osnr_db = required_osnr(curve);
                s.required_psd_ratio_db = psd_ratio_db(*s.required_osnr_db, signal_bandwidth(cfg, b, m));
            } catch (const RangeError&) {
            }
            out.push_back(s);
        }
    return out;
}

double pooled_q2(const std::vector<PooledPoint>& pooled, const std::string& experiment, double baud_hz,
                 Shaping mode, double detuning_hz, int pass_index) {
    for (const auto& p : pooled)
        if (p.experiment == experiment && p.baud_hz == baud_hz && p.mode == mode &&
            std::abs(p.detuning_hz - detuning_hz) < 1.0 && p.pass_index == pass_index)
            return p.q2_db();
    return std::numeric_limits<double>::quiet_NaN();
}

std::string format_summary(const std::vector<ResultRow>& rows, const ExperimentConfig& cfg) {
    std::ostringstream os;
    const auto pooled = pool_over_seeds(rows);
    char buf[256];
    auto opt = [](const std::optional<double>& v) { return v ? fmt6(*v) : std::string("n/a"); };
    switch (cfg.experiment) {
    case ExperimentKind::BackToBack: {
        os << "required OSNR / PSD ratio at Q2 = " << kHdFec7.q2_db << " dB (pooled over seeds)\n";
        os << "baud_gbd,mode,required_osnr_db,required_psd_ratio_db\n";
        for (const auto& s : summarize_back_to_back(rows, cfg))
            os << fmt6(s.baud_hz / 1e9) << "," << to_string(s.mode) << "," << opt(s.required_osnr_db) << ","
               << opt(s.required_psd_ratio_db) << "\n";
        break;
    }
    case ExperimentKind::Detuning: {
        os << "pooled Q2 (dB) vs detuning (GHz); min/max across seeds in brackets\n";
        for (const auto& p : pooled) {
            std::snprintf(buf, sizeof buf, "%6s Gbd %-8s det %+5.1f GHz  Q2 %7s [%s, %s]%s\n",
                          fmt6(p.baud_hz / 1e9).c_str(), std::string(to_string(p.mode)).c_str(), p.detuning_hz / 1e9,
                          fmt6(p.q2_db()).c_str(), fmt6(p.q2_min).c_str(), fmt6(p.q2_max).c_str(),
                          p.failures ? "  (failures)" : "");
            os << buf;
        }
        break;
    }
    case ExperimentKind::MultiPass: {
        os << "pooled Q2 (dB) per pass (pass 0 = before the loop) and nodes reached\n";
        for (NodeMode n : cfg.node_modes) {
            const std::string name = "multipass-" + std::string(to_string(n));
            for (double b : cfg.baud_list_hz)
                for (Shaping m : cfg.modes) {
                    std::vector<double> per_pass;
                    os << name << " " << fmt6(b / 1e9) << " Gbd " << to_string(m) << ":";
                    for (int p = 0; p <= cfg.max_passes; ++p) {
                        const double q = pooled_q2(pooled, name, b, m, 0, p);
                        os << " " << fmt6(q);
                        if (p > 0) per_pass.push_back(q);
                    }
                    os << "  nodes_reached " << nodes_reached(per_pass) << "\n";
                }
        }
        break;
    }
    }
    int failures = 0;
    for (const auto& r : rows)
        if (!r.ok()) ++failures;
    if (failures) os << failures << " row(s) failed; their BER and Q2 are recorded as nan\n";
    return os.str();
}

} // namespace cwdm

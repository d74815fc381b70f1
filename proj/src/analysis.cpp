#include "lrc/analysis.hpp"

#include "lrc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace lrc {

SweepGrid default_map_grid(std::vector<std::uint64_t> seeds)
{
    SweepGrid g;
    for (int i = 0; i <= 10; ++i) g.delta_f.push_back(-50.0 + 10.0 * i);
    for (int i = 0; i <= 8; ++i) g.k_f.push_back(0.025 * i);
    g.seeds = std::move(seeds);
    return g;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads,
                  const std::atomic<bool>* cancel)
{
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            if (cancel && cancel->load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    if (threads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

PreparedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed)
{
    auto labeled = [&](int index) {
        auto s = simulate_stream(cfg.link, cfg.run.n_symbols, stream_seed(seed, index), cfg.run.osnr_db);
        return LabeledTrace{std::move(s.detected), std::move(s.symbols)};
    };
    const auto train = labeled(0);
    std::vector<LabeledTrace> tests;
    for (int i = 1; i <= cfg.run.n_test_sets; ++i) tests.push_back(labeled(i));
    return prepare(cfg, train, tests);
}

namespace {

double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

void fill_reference(SweepRecord& r, const ExperimentConfig& cfg, const PreparedData& data)
{
    r.ber_naive = mean_of(data.naive_ber);
    r.ber_lr = evaluate_baseline(data, cfg.readout, cfg.readout.taps).mean_ber;
}

SweepRecord failed(SweepRecord r, const std::exception& e)
{
    r.snr_db = r.ber_rc = std::numeric_limits<double>::quiet_NaN();
    r.n_bits = 0;
    r.reason = e.what();
    return r;
}

class Collector {
public:
    Collector(std::size_t n, const SweepOptions& opt) : records_(n), done_(n, false), opt_(opt) {}

    void put(std::size_t i, SweepRecord r)
    {
        std::lock_guard lock(mu_);
        records_[i] = std::move(r);
        done_[i] = true;
        if (opt_.on_record) opt_.on_record(records_[i]);
    }

    std::vector<SweepRecord> finish()
    {
        std::vector<SweepRecord> out;
        for (std::size_t i = 0; i < records_.size(); ++i) {
            if (done_[i]) out.push_back(std::move(records_[i]));
        }
        return out;
    }

private:
    std::vector<SweepRecord> records_;
    std::vector<bool> done_;
    const SweepOptions& opt_;
    std::mutex mu_;
};

} // namespace

SweepRecord evaluate_point(const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed, bool with_snr)
{
    SweepRecord r;
    r.delta_f = cfg.reservoir.delta_f;
    r.k_f = cfg.reservoir.k_f;
    r.seed = seed;
    const auto nodes = run_reservoir(cfg.reservoir, cfg.mask.n_nodes, data);
    const auto rc = evaluate_readout(nodes.train, nodes.tests, data, cfg.readout, cfg.readout.taps);
    r.ber_rc = rc.mean_ber;
    for (const auto& t : rc.test) r.n_bits += t.counted_bits;
    if (with_snr) r.snr_db = reservoir_snr(cfg, data);
    return r;
}

std::vector<SweepRecord> run_map(const SweepGrid& grid, const ExperimentConfig& cfg,
                                 const std::vector<PreparedData>& data, const SweepOptions& opt)
{
    if (data.size() != grid.seeds.size()) {
        throw std::invalid_argument("run_map: one prepared data set per seed is required");
    }
    std::vector<double> lr(data.size()), naive(data.size());
    for (std::size_t s = 0; s < data.size(); ++s) {
        SweepRecord ref;
        fill_reference(ref, cfg, data[s]);
        lr[s] = ref.ber_lr;
        naive[s] = ref.ber_naive;
    }
    const std::size_t nd = grid.delta_f.size(), nk = grid.k_f.size();
    const std::size_t total = grid.seeds.size() * nd * nk;
    Collector out(total, opt);
    parallel_for(
        total,
        [&](std::size_t i) {
            const std::size_t s = i / (nd * nk);
            const std::size_t d = (i / nk) % nd;
            const std::size_t k = i % nk;
            ExperimentConfig point = cfg;
            point.reservoir.delta_f = grid.delta_f[d];
            point.reservoir.k_f = grid.k_f[k];
            SweepRecord r;
            r.delta_f = grid.delta_f[d];
            r.k_f = grid.k_f[k];
            r.seed = grid.seeds[s];
            try {
                point.reservoir.validate();
                r = evaluate_point(point, data[s], grid.seeds[s], opt.with_snr);
            } catch (const std::exception& e) {
                r = failed(r, e);
            }
            r.ber_lr = lr[s];
            r.ber_naive = naive[s];
            out.put(i, std::move(r));
        },
        opt.threads, opt.cancel);
    return out.finish();
}

std::vector<SweepRecord> run_tap_sweep(const std::vector<int>& taps, const ExperimentConfig& cfg,
                                       const std::vector<std::uint64_t>& seeds,
                                       const std::vector<PreparedData>& data, const SweepOptions& opt)
{
    if (data.size() != seeds.size()) {
        throw std::invalid_argument("run_tap_sweep: one prepared data set per seed is required");
    }
    std::vector<NodeSet> nodes(data.size());
    parallel_for(
        data.size(), [&](std::size_t s) { nodes[s] = run_reservoir(cfg.reservoir, cfg.mask.n_nodes, data[s]); },
        opt.threads, opt.cancel);
    if (opt.cancel && opt.cancel->load()) return {};

    Collector out(seeds.size() * taps.size(), opt);
    parallel_for(
        seeds.size() * taps.size(),
        [&](std::size_t i) {
            const std::size_t s = i / taps.size();
            const int k = taps[i % taps.size()];
            SweepRecord r;
            r.x = k;
            r.delta_f = cfg.reservoir.delta_f;
            r.k_f = cfg.reservoir.k_f;
            r.seed = seeds[s];
            try {
                const auto rc = evaluate_readout(nodes[s].train, nodes[s].tests, data[s], cfg.readout, k);
                r.ber_rc = rc.mean_ber;
                for (const auto& t : rc.test) r.n_bits += t.counted_bits;
                r.ber_lr = evaluate_baseline(data[s], cfg.readout, k).mean_ber;
                r.ber_naive = mean_of(data[s].naive_ber);
            } catch (const std::exception& e) {
                r = failed(r, e);
            }
            out.put(i, std::move(r));
        },
        opt.threads, opt.cancel);
    return out.finish();
}

std::vector<SweepRecord> run_power_sweep(const std::vector<double>& power_dbm, const ExperimentConfig& cfg,
                                         const std::vector<std::uint64_t>& seeds, const SweepOptions& opt)
{
    Collector out(seeds.size() * power_dbm.size(), opt);
    parallel_for(
        seeds.size() * power_dbm.size(),
        [&](std::size_t i) {
            const std::size_t s = i / power_dbm.size();
            ExperimentConfig point = cfg;
            point.link.launch_peak_power_dbm = power_dbm[i % power_dbm.size()];
            SweepRecord r;
            r.x = point.link.launch_peak_power_dbm;
            r.delta_f = cfg.reservoir.delta_f;
            r.k_f = cfg.reservoir.k_f;
            r.seed = seeds[s];
            try {
                const auto data = prepare_seed(point, seeds[s]);
                r = evaluate_point(point, data, seeds[s], opt.with_snr);
                r.x = point.link.launch_peak_power_dbm;
                fill_reference(r, point, data);
            } catch (const std::exception& e) {
                r = failed(r, e);
            }
            out.put(i, std::move(r));
        },
        opt.threads, opt.cancel);
    return out.finish();
}

std::vector<SweepRecord> run_osnr_sweep(const std::vector<double>& osnr_db, const ExperimentConfig& cfg,
                                        const std::vector<std::uint64_t>& seeds, const SweepOptions& opt)
{
    const int n_streams = 1 + cfg.run.n_test_sets;
    struct Received {
        std::vector<OpticalField> fields;
        std::vector<SymbolStream> symbols;
    };
    std::vector<Received> received(seeds.size());
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        received[s].fields.resize(static_cast<std::size_t>(n_streams));
        received[s].symbols.resize(static_cast<std::size_t>(n_streams));
    }
    parallel_for(
        seeds.size() * static_cast<std::size_t>(n_streams),
        [&](std::size_t i) {
            const std::size_t s = i / static_cast<std::size_t>(n_streams);
            const int idx = static_cast<int>(i % static_cast<std::size_t>(n_streams));
            LinkConfig link = cfg.link;
            link.rng_seed = stream_seed(seeds[s], idx);
            auto sym = encode_pam4(random_bits(2 * cfg.run.n_symbols, link.rng_seed));
            received[s].fields[static_cast<std::size_t>(idx)] = propagate(modulate(sym, link), link);
            received[s].symbols[static_cast<std::size_t>(idx)] = std::move(sym);
        },
        opt.threads, opt.cancel);
    if (opt.cancel && opt.cancel->load()) return {};

    Collector out(seeds.size() * osnr_db.size(), opt);
    parallel_for(
        seeds.size() * osnr_db.size(),
        [&](std::size_t i) {
            const std::size_t s = i / osnr_db.size();
            const double target = osnr_db[i % osnr_db.size()];
            SweepRecord r;
            r.x = target;
            r.delta_f = cfg.reservoir.delta_f;
            r.k_f = cfg.reservoir.k_f;
            r.seed = seeds[s];
            try {
                std::vector<LabeledTrace> traces;
                for (int idx = 0; idx < n_streams; ++idx) {
                    LinkConfig link = cfg.link;
                    link.rng_seed = stream_seed(seeds[s], idx);
                    const auto& field = received[s].fields[static_cast<std::size_t>(idx)];
                    traces.push_back({detect(add_ase_noise(field, target, link.rng_seed), link),
                                      received[s].symbols[static_cast<std::size_t>(idx)]});
                }
                const std::vector<LabeledTrace> tests(traces.begin() + 1, traces.end());
                const auto data = prepare(cfg, traces.front(), tests);
                r = evaluate_point(cfg, data, seeds[s], opt.with_snr);
                r.x = target;
                fill_reference(r, cfg, data);
            } catch (const std::exception& e) {
                r = failed(r, e);
            }
            out.put(i, std::move(r));
        },
        opt.threads, opt.cancel);
    return out.finish();
}

// ---------------------------------------------------------------------------
// Diagnostics

LaggedCorrelation pearson_lagged(std::span<const double> a, std::span<const double> b, int max_lag)
{
    if (a.size() != b.size()) throw std::invalid_argument("pearson_lagged: inputs differ in length");
    if (a.size() < 2) throw std::invalid_argument("pearson_lagged: need at least 2 samples");
    if (max_lag < 0) throw std::invalid_argument("pearson_lagged: max_lag must be >= 0");
    const auto n = static_cast<long long>(a.size());
    max_lag = static_cast<int>(std::min<long long>(max_lag, n - 2));

    auto centered_var = [](std::span<const double> v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s;
    };
    if (centered_var(a) == 0.0 || centered_var(b) == 0.0) {
        throw std::invalid_argument("pearson_lagged: zero-variance input");
    }

    LaggedCorrelation best{std::numeric_limits<double>::quiet_NaN(), 0};
    for (int lag = -max_lag; lag <= max_lag; ++lag) {
        const long long first = std::max(0LL, -static_cast<long long>(lag));
        const long long last = std::min(n, n - lag);
        const auto count = static_cast<std::size_t>(last - first);
        const auto xa = a.subspan(static_cast<std::size_t>(first), count);
        const auto xb = b.subspan(static_cast<std::size_t>(first + lag), count);
        double ma = 0.0, mb = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            ma += xa[i];
            mb += xb[i];
        }
        ma /= static_cast<double>(count);
        mb /= static_cast<double>(count);
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double da = xa[i] - ma, db = xb[i] - mb;
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        if (saa == 0.0 || sbb == 0.0) continue;
        const double r = sab / std::sqrt(saa * sbb);
        if (std::isnan(best.r) || std::abs(r) > std::abs(best.r)) best = {r, lag};
    }
    if (std::isnan(best.r)) throw std::invalid_argument("pearson_lagged: zero-variance input at every lag");
    return best;
}

LaggedCorrelation injection_response_correlation(const ExperimentConfig& cfg, const PreparedData& data,
                                                 std::size_t symbols, int max_lag)
{
    const std::size_t n = cfg.mask.n_nodes;
    symbols = std::min(symbols, data.train_masked.size() / n);
    const auto input = std::span<const double>(data.train_masked).first(symbols * n);
    const auto nodes = reservoir_nodes(input, n, cfg.reservoir);
    std::vector<double> response(symbols * n);
    for (std::size_t b = 0; b < symbols; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            response[b * n + i] = nodes(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i));
        }
    }
    return pearson_lagged(input, response, max_lag);
}

std::size_t EyeHistogram::bands(std::size_t phase) const
{
    std::size_t runs = 0;
    bool inside = false;
    for (std::size_t a = 0; a < amp_bins; ++a) {
        const bool occupied = at(a, phase) > 0;
        if (occupied && !inside) ++runs;
        inside = occupied;
    }
    return runs;
}

EyeHistogram eye_data(const DetectedWaveform& s, std::size_t amp_bins)
{
    if (amp_bins == 0) throw std::invalid_argument("eye_data: amp_bins must be > 0");
    const std::size_t sps = s.samples_per_baud();
    EyeHistogram h;
    h.phase_bins = 2 * sps;
    h.amp_bins = amp_bins;
    h.counts.assign(h.phase_bins * amp_bins, 0);
    if (s.samples.empty()) return h;
    const auto [lo, hi] = std::minmax_element(s.samples.begin(), s.samples.end());
    h.amp_min = *lo;
    h.amp_max = *hi;
    const double span = h.amp_max - h.amp_min;
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        std::size_t a = 0;
        if (span > 0) {
            a = static_cast<std::size_t>((s.samples[i] - h.amp_min) / span * static_cast<double>(amp_bins));
            a = std::min(a, amp_bins - 1);
        }
        ++h.counts[a * h.phase_bins + i % h.phase_bins];
    }
    return h;
}

// ---------------------------------------------------------------------------
// Aggregation and output

std::vector<AggregateRow> aggregate(const std::vector<SweepRecord>& records)
{
    auto key_of = [](const SweepRecord& r) {
        // NaN x (no swept parameter) sorts as a single group.
        return std::make_tuple(std::isnan(r.x) ? -std::numeric_limits<double>::infinity() : r.x, r.delta_f, r.k_f);
    };
    std::map<std::tuple<double, double, double>, std::vector<const SweepRecord*>> groups;
    for (const auto& r : records) groups[key_of(r)].push_back(&r);

    std::vector<AggregateRow> rows;
    for (const auto& [key, members] : groups) {
        AggregateRow row;
        row.x = members.front()->x;
        row.delta_f = std::get<1>(key);
        row.k_f = std::get<2>(key);
        std::vector<double> ber, snr, lr, naive;
        for (const auto* m : members) {
            if (std::isnan(m->ber_rc)) {
                ++row.nan_count;
                continue;
            }
            ber.push_back(m->ber_rc);
            if (!std::isnan(m->snr_db)) snr.push_back(m->snr_db);
            if (!std::isnan(m->ber_lr)) lr.push_back(m->ber_lr);
            if (!std::isnan(m->ber_naive)) naive.push_back(m->ber_naive);
        }
        row.count = ber.size();
        if (!ber.empty()) {
            row.ber_mean = mean_of(ber);
            row.ber_min = *std::min_element(ber.begin(), ber.end());
            row.ber_max = *std::max_element(ber.begin(), ber.end());
            if (ber.size() >= 2) {
                double ss = 0.0;
                for (double b : ber) ss += (b - row.ber_mean) * (b - row.ber_mean);
                row.ber_std = std::sqrt(ss / static_cast<double>(ber.size() - 1));
            }
        }
        if (!snr.empty()) row.snr_mean = mean_of(snr);
        if (!lr.empty()) row.ber_lr_mean = mean_of(lr);
        if (!naive.empty()) row.ber_naive_mean = mean_of(naive);
        rows.push_back(row);
    }
    return rows;
}

namespace {

std::string num(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

double parse_num(const std::string& s)
{
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw IoError("bad number in CSV: '" + s + "'");
    return v;
}

std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

} // namespace

std::string records_csv_header(const std::string& x_name)
{
    return (x_name.empty() ? "" : x_name + ",") + "delta_f_ghz,k_f,seed,snr_db,ber_rc,ber_lr,ber_naive,n_bits,reason\n";
}

std::string record_csv_line(const SweepRecord& r, bool with_x)
{
    std::string line = with_x ? num(r.x) + "," : "";
    line += num(r.delta_f) + "," + num(r.k_f) + "," + std::to_string(r.seed) + "," + num(r.snr_db) + "," +
            num(r.ber_rc) + "," + num(r.ber_lr) + "," + num(r.ber_naive) + "," + std::to_string(r.n_bits) + "," +
            csv_escape(r.reason) + "\n";
    return line;
}

void write_records_csv(const std::filesystem::path& path, const std::vector<SweepRecord>& records,
                       const std::string& x_name)
{
    auto out = open_out(path);
    out << records_csv_header(x_name);
    for (const auto& r : records) out << record_csv_line(r, !x_name.empty());
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<SweepRecord> read_records_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    const auto header = split_csv(line);
    const bool has_x = header.size() == 10;
    if (header.size() != 9 && !has_x) throw IoError(path.string() + ": unexpected header");
    std::vector<SweepRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(header.size()) + " fields");
        }
        std::size_t c = 0;
        SweepRecord r;
        if (has_x) r.x = parse_num(f[c++]);
        r.delta_f = parse_num(f[c++]);
        r.k_f = parse_num(f[c++]);
        r.seed = std::stoull(f[c++]);
        r.snr_db = parse_num(f[c++]);
        r.ber_rc = parse_num(f[c++]);
        r.ber_lr = parse_num(f[c++]);
        r.ber_naive = parse_num(f[c++]);
        r.n_bits = std::stoull(f[c++]);
        r.reason = f[c++];
        out.push_back(std::move(r));
    }
    return out;
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows,
                         const std::string& x_name)
{
    auto out = open_out(path);
    if (!x_name.empty()) out << x_name << ',';
    out << "delta_f_ghz,k_f,count,nan_count,snr_db_mean,ber_rc_mean,ber_rc_min,ber_rc_max,ber_rc_std,"
           "ber_lr_mean,ber_naive_mean\n";
    for (const auto& r : rows) {
        if (!x_name.empty()) out << num(r.x) << ',';
        out << num(r.delta_f) << ',' << num(r.k_f) << ',' << r.count << ',' << r.nan_count << ','
            << num(r.snr_mean) << ',' << num(r.ber_mean) << ',' << num(r.ber_min) << ',' << num(r.ber_max) << ','
            << num(r.ber_std) << ',' << num(r.ber_lr_mean) << ',' << num(r.ber_naive_mean) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

// Perceptually ordered blue -> yellow ramp.
std::string ramp(double t)
{
    static const double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(t));
    const double f = t - i;
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                  static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                  static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
    return buf;
}

std::string label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

void write_heatmap_svg(const std::filesystem::path& path, const std::vector<double>& xs,
                       const std::vector<double>& ys, const std::vector<std::vector<double>>& values,
                       const std::string& title, const std::string& x_label, const std::string& y_label,
                       bool log_scale)
{
    if (values.size() != ys.size()) throw std::invalid_argument("write_heatmap_svg: row count differs from ys");
    for (const auto& row : values) {
        if (row.size() != xs.size()) throw std::invalid_argument("write_heatmap_svg: column count differs from xs");
    }
    auto transform = [&](double v) {
        if (log_scale) return v > 0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
        return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
    };
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& row : values) {
        for (double v : row) {
            const double t = transform(v);
            if (std::isnan(t)) continue;
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    }
    if (!(hi > lo)) hi = lo + 1.0;

    const double cell_w = 48, cell_h = 32, left = 80, top = 50;
    const double width = left + cell_w * static_cast<double>(xs.size()) + 120;
    const double height = top + cell_h * static_cast<double>(ys.size()) + 70;
    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
    // Top row of the image is the largest y.
    for (std::size_t r = 0; r < ys.size(); ++r) {
        const double y = top + cell_h * static_cast<double>(ys.size() - 1 - r);
        out << "<text x=\"" << left - 6 << "\" y=\"" << y + cell_h / 2 + 4 << "\" text-anchor=\"end\">"
            << label(ys[r]) << "</text>\n";
        for (std::size_t c = 0; c < xs.size(); ++c) {
            const double t = transform(values[r][c]);
            const std::string fill = std::isnan(t) ? "#cccccc" : ramp((t - lo) / (hi - lo));
            out << "<rect x=\"" << left + cell_w * static_cast<double>(c) << "\" y=\"" << y << "\" width=\""
                << cell_w << "\" height=\"" << cell_h << "\" fill=\"" << fill << "\"><title>" << label(xs[c])
                << ", " << label(ys[r]) << ": " << label(values[r][c]) << "</title></rect>\n";
        }
    }
    const double bottom = top + cell_h * static_cast<double>(ys.size());
    for (std::size_t c = 0; c < xs.size(); ++c) {
        out << "<text x=\"" << left + cell_w * (static_cast<double>(c) + 0.5) << "\" y=\"" << bottom + 16
            << "\" text-anchor=\"middle\">" << label(xs[c]) << "</text>\n";
    }
    out << "<text x=\"" << left + cell_w * static_cast<double>(xs.size()) / 2 << "\" y=\"" << bottom + 40
        << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
    out << "<text x=\"20\" y=\"" << top + cell_h * static_cast<double>(ys.size()) / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << top + cell_h * static_cast<double>(ys.size()) / 2
        << ")\">" << xml_escape(y_label) << "</text>\n";

    const double bar_x = left + cell_w * static_cast<double>(xs.size()) + 20;
    const double bar_h = cell_h * static_cast<double>(ys.size());
    for (int i = 0; i < 50; ++i) {
        out << "<rect x=\"" << bar_x << "\" y=\"" << top + bar_h * (49 - i) / 50.0 << "\" width=\"16\" height=\""
            << bar_h / 50.0 + 0.5 << "\" fill=\"" << ramp(i / 49.0) << "\"/>\n";
    }
    const std::string prefix = log_scale ? "1e" : "";
    out << "<text x=\"" << bar_x + 22 << "\" y=\"" << top + 10 << "\">" << prefix << label(hi) << "</text>\n";
    out << "<text x=\"" << bar_x + 22 << "\" y=\"" << top + bar_h << "\">" << prefix << label(lo) << "</text>\n";
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path.string());
}

void write_line_svg(const std::filesystem::path& path, const std::vector<LineSeries>& series,
                    const std::string& title, const std::string& x_label, const std::string& y_label, bool log_y,
                    double hline)
{
    auto ty = [&](double v) {
        if (log_y) return v > 0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
        return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
    };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw std::invalid_argument("write_line_svg: x and y differ in length");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = ty(s.y[i]);
            if (std::isnan(y) || !std::isfinite(s.x[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    const double h_t = ty(hline);
    if (!std::isnan(h_t)) {
        y0 = std::min(y0, h_t);
        y1 = std::max(y1, h_t);
    }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
    if (!std::isfinite(y0)) y0 = 0.0, y1 = 1.0;

    const double left = 70, top = 40, w = 480, h = 300;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * w; };
    auto py = [&](double y) { return top + h - (y - y0) / (y1 - y0) * h; };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + w + 160 << "\" height=\"" << top + h + 60
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<text x=\"" << left << "\" y=\"22\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0;
        const double yv = y0 + (y1 - y0) * i / 4.0;
        out << "<text x=\"" << px(xv) << "\" y=\"" << top + h + 16 << "\" text-anchor=\"middle\">" << label(xv)
            << "</text>\n";
        out << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
            << (log_y ? "1e" : "") << label(yv) << "</text>\n";
    }
    out << "<text x=\"" << left + w / 2 << "\" y=\"" << top + h + 40 << "\" text-anchor=\"middle\">"
        << xml_escape(x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << top + h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << top + h / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
    if (!std::isnan(h_t)) {
        out << "<line x1=\"" << left << "\" x2=\"" << left + w << "\" y1=\"" << py(h_t) << "\" y2=\"" << py(h_t)
            << "\" stroke=\"#888\" stroke-dasharray=\"5,4\"/>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % 6];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = ty(s.y[i]);
            if (std::isnan(y)) continue;
            pts += label(px(s.x[i])) + "," + label(py(y)) + " ";
            out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        out << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
        out << "<text x=\"" << left + w + 12 << "\" y=\"" << top + 14 + 16 * static_cast<double>(k) << "\" fill=\""
            << color << "\">" << xml_escape(s.name) << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace lrc

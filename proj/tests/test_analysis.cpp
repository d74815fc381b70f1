#include "support.hpp"

#include "lrc/analysis.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace lrc;

namespace {

ExperimentConfig tiny_config()
{
    ExperimentConfig cfg;
    cfg.run.n_symbols = 512;
    cfg.run.n_test_sets = 1;
    cfg.run.probe_symbols = 32;
    cfg.readout.taps = 2;
    return cfg;
}

SweepRecord record(double x, double df, double kf, std::uint64_t seed, double ber)
{
    SweepRecord r;
    r.x = x;
    r.delta_f = df;
    r.k_f = kf;
    r.seed = seed;
    r.ber_rc = ber;
    r.ber_lr = 0.03;
    r.ber_naive = 0.3;
    r.n_bits = 100;
    return r;
}

} // namespace

TEST_SUITE("analysis") {

TEST_CASE("lagged pearson correlation")
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> a(100000), b(100000);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);

    const auto self = pearson_lagged(a, a, 4);
    CHECK(self.r == doctest::Approx(1.0));
    CHECK(self.lag == 0);
    std::vector<double> neg(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
    CHECK(pearson_lagged(a, neg, 4).r == doctest::Approx(-1.0));
    CHECK(std::abs(pearson_lagged(a, b, 4).r) < 0.02);

    // b[i + 3] = a[i]
    std::vector<double> delayed(a.size(), 0.0);
    for (std::size_t i = 0; i + 3 < a.size(); ++i) delayed[i + 3] = a[i];
    const auto d = pearson_lagged(a, delayed, 5);
    CHECK(d.lag == 3);
    CHECK(d.r > 0.99);

    CHECK_THROWS_AS(pearson_lagged(std::vector<double>(10, 1.0), a, 0), std::invalid_argument);
    CHECK_THROWS_AS(pearson_lagged(std::vector<double>{1.0}, std::vector<double>{2.0}, 0), std::invalid_argument);
}

TEST_CASE("eye histogram")
{
    auto cfg = test::quiet_link();
    cfg.fiber_length_km = 0.0;
    const auto sym = encode_pam4(random_bits(8192, 2));
    const auto b2b = detect(modulate(sym, cfg), cfg);
    const auto open = eye_data(b2b);
    CHECK(open.phase_bins == 16);
    CHECK(open.bands(4) == 4);
    CHECK(open.bands(12) == 4);

    DetectedWaveform flat;
    flat.samples.assign(800, 0.3);
    flat.dt = 1.0;
    flat.baud_period = 8.0;
    const auto one = eye_data(flat, 16);
    std::size_t rows = 0;
    for (std::size_t a = 0; a < one.amp_bins; ++a) {
        std::size_t sum = 0;
        for (std::size_t p = 0; p < one.phase_bins; ++p) sum += one.at(a, p);
        rows += sum > 0 ? 1 : 0;
    }
    CHECK(rows == 1);

    LinkConfig r1;
    const auto far = detect(propagate(modulate(sym, r1), r1), r1);
    const auto closed = eye_data(far);
    CHECK(closed.bands(4) < 4);
}

TEST_CASE("aggregation")
{
    std::vector<SweepRecord> recs{record(NAN, 0, 0.05, 1, 0.004), record(NAN, 0, 0.05, 2, 0.006),
                                  record(NAN, 0, 0.05, 3, 0.011), record(NAN, -10, 0.05, 1, 0.02),
                                  record(NAN, 0, 0.1, 1, NAN), record(NAN, 0, 0.1, 2, 0.03)};
    const auto rows = aggregate(recs);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].delta_f == -10);
    CHECK(rows[0].count == 1);
    CHECK(rows[0].ber_mean == 0.02);
    CHECK(std::isnan(rows[0].ber_std));
    const auto& mid = rows[1];
    CHECK(mid.count == 3);
    CHECK(mid.ber_min <= mid.ber_mean);
    CHECK(mid.ber_mean <= mid.ber_max);
    CHECK(mid.ber_mean == doctest::Approx(0.007));
    CHECK(rows[2].nan_count == 1);
    CHECK(rows[2].count == 1);
    CHECK(rows[2].ber_mean == 0.03);

    std::vector<SweepRecord> swept{record(10, 0, 0.05, 1, 0.01), record(-8, 0, 0.05, 1, 0.1)};
    const auto by_x = aggregate(swept);
    CHECK(by_x[0].x == -8);
    CHECK(by_x[1].x == 10);
}

TEST_CASE("records csv round trip")
{
    auto a = record(NAN, -10, 0.025, 7, 0.0123456789012345);
    a.snr_db = 21.5;
    auto b = record(NAN, 50, 0.2, 7, NAN);
    b.reason = "reservoir: non-finite state, \"quoted\"";
    const auto path = std::filesystem::temp_directory_path() / "lrc_records_test.csv";
    write_records_csv(path, {a, b});
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "delta_f_ghz,k_f,seed,snr_db,ber_rc,ber_lr,ber_naive,n_bits,reason");
    in.close();
    const auto back = read_records_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].ber_rc == a.ber_rc);
    CHECK(back[0].snr_db == 21.5);
    CHECK(back[0].seed == 7);
    CHECK(std::isnan(back[1].ber_rc));
    CHECK(back[1].reason == b.reason);

    write_records_csv(path, {record(4, 0, 0.05, 1, 0.002)}, "power_dbm");
    const auto with_x = read_records_csv(path);
    REQUIRE(with_x.size() == 1);
    CHECK(with_x[0].x == 4);
    std::filesystem::remove(path);
}

TEST_CASE("svg output is written")
{
    const auto dir = std::filesystem::temp_directory_path();
    write_heatmap_svg(dir / "lrc_map.svg", {-10, 0, 10}, {0, 0.1}, {{0.01, 0.002, NAN}, {0.1, 0.2, 0.3}}, "BER",
                      "detuning (GHz)", "k_f", true);
    write_line_svg(dir / "lrc_line.svg", {{"rc", {0, 1, 2}, {0.1, 0.01, 0.001}}}, "BER", "x", "BER", true, 3.8e-3);
    for (const char* name : {"lrc_map.svg", "lrc_line.svg"}) {
        std::ifstream in(dir / name);
        std::string first;
        std::getline(in, first);
        CHECK(first.find("<svg") != std::string::npos);
        std::filesystem::remove(dir / name);
    }
}

TEST_CASE("parallel_for visits every index once and honours cancel")
{
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); }, 4);
    for (const auto& h : hits) CHECK(h.load() == 1);

    std::atomic<bool> cancel{true};
    std::atomic<int> count{0};
    parallel_for(100, [&](std::size_t) { count.fetch_add(1); }, 2, &cancel);
    CHECK(count.load() == 0);
}

TEST_CASE("map sweeps are reproducible and isolate failures")
{
    const auto cfg = tiny_config();
    const std::vector<std::uint64_t> seeds{1};
    const std::vector<PreparedData> data{prepare_seed(cfg, 1)};
    SweepGrid grid;
    grid.delta_f = {0.0, 60.0};
    grid.k_f = {0.05, 0.1};
    grid.seeds = seeds;
    SweepOptions opt;
    opt.threads = 2;
    const auto a = run_map(grid, cfg, data, opt);
    const auto b = run_map(grid, cfg, data, opt);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].delta_f == b[i].delta_f);
        CHECK(a[i].k_f == b[i].k_f);
        CHECK(std::memcmp(&a[i].ber_rc, &b[i].ber_rc, sizeof(double)) == 0);
        CHECK(std::memcmp(&a[i].snr_db, &b[i].snr_db, sizeof(double)) == 0);
    }
    CHECK(std::isfinite(a[0].ber_rc));
    CHECK(std::isfinite(a[0].snr_db));
    CHECK(a[0].reason.empty());
    CHECK(std::isnan(a[2].ber_rc));
    CHECK(a[2].reason.find("delta_f") != std::string::npos);
    CHECK(a[2].ber_lr == a[0].ber_lr);
}

TEST_CASE("tap sweep shares node responses across tap counts")
{
    const auto cfg = tiny_config();
    const std::vector<std::uint64_t> seeds{1};
    const std::vector<PreparedData> data{prepare_seed(cfg, 1)};
    const auto recs = run_tap_sweep({0, 2}, cfg, seeds, data, {});
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].x == 0);
    CHECK(recs[1].x == 2);
    const auto direct = evaluate_point(cfg, data[0], 1, false);
    CHECK(recs[1].ber_rc == direct.ber_rc);
}

} // TEST_SUITE

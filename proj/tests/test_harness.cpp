#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dpe/harness.hpp"
#include "dpe/plot.hpp"

using dpe::Algo;
using dpe::Config;
using dpe::config_error;
using dpe::parse_config;
using dpe::run_experiment;
using dpe::run_single;

namespace {

std::string rows_to_csv(const std::vector<dpe::TraceRow>& rows) {
    std::ostringstream out;
    out << dpe::kTraceHeader << '\n';
    for (const auto& row : rows) dpe::write_trace_row(out, row);
    return out.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/dpe_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
    void write(const std::string& text) const {
        std::ofstream out(path);
        out << text;
    }
    std::string read() const {
        std::ifstream in(path);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    }
};

}  // namespace

TEST_CASE("well-formed config parses with defaults", "[harness]") {
    const Config cfg =
        parse_config("K=6 M=3 means=0.9,0.8,0.7,0.6,0.5,0.4 T=1000000 seeds=50 algo=dpe");
    CHECK(cfg.K == 6);
    CHECK(cfg.M == 3);
    CHECK(cfg.means.size() == 6);
    CHECK(cfg.T == 1000000);
    CHECK(cfg.seeds.size() == 50);
    CHECK(cfg.seeds.front() == 1);
    CHECK(cfg.algorithm == Algo::dpe);
    CHECK(cfg.checkpoints == std::vector<long>{100, 1000, 10000, 100000, 1000000});
}

TEST_CASE("config rejections name the offending key", "[harness]") {
    const auto expect_key = [](const std::string& text, const std::string& key) {
        try {
            parse_config(text);
            FAIL("expected rejection of " + text);
        } catch (const config_error& e) {
            CHECK(e.key() == key);
        }
    };
    expect_key("K=3 M=3 means=0.9,0.8,0.7 T=100", "M");
    expect_key("K=3 M=4 means=0.9,0.8,0.7 T=100", "M");
    expect_key("K=3 M=2 means=0.9,0.8 T=100", "means");
    expect_key("K=3 M=2 means=0.9,0.9,0.7 T=100", "means");
    expect_key("K=3 M=2 means=0.9,0.8,0.7", "T");
    expect_key("M=2 means=0.9,0.8,0.7 T=10", "K");
    expect_key("K=3 M=2 means=0.9,0.8,0.7 T=10 wat=1", "wat");
    expect_key("K=3 M=2 means=0.9,0.8,0.7 T=10 algo=ucb1", "algo");
    expect_key("K=3 M=2 means=0.9,0.8,0.7 T=10 checkpoints=5,200", "checkpoints");
    expect_key("K=3 M=2 means=0.9,0.8,0.7 T=10 seeds=0", "seeds");
    expect_key("K=3 M=2 means=0.9,0.8,0.7 T=10 lemma_truncation=10", "lemma_truncation");
}

TEST_CASE("config accepts newlines, comments and explicit seeds", "[harness]") {
    const Config cfg = parse_config(
        "# demo instance\nK=4\nM=2\nmeans=0.9,0.7,0.5,0.3\nT=500  # horizon\n"
        "seeds=11,22,33\nalgorithm=centralized\ncheckpoints=10,500\n");
    CHECK(cfg.seeds == std::vector<std::uint64_t>{11, 22, 33});
    CHECK(cfg.algorithm == Algo::centralized);
    CHECK(cfg.checkpoints == std::vector<long>{10, 500});
}

TEST_CASE("a final checkpoint at the horizon is implied", "[harness]") {
    const Config cfg = parse_config("K=3 M=2 means=0.9,0.8,0.7 T=50 checkpoints=10,20");
    CHECK(cfg.checkpoints == std::vector<long>{10, 20, 50});
}

TEST_CASE("oracle runs have zero regret at every checkpoint", "[harness]") {
    Config cfg = parse_config("K=4 M=2 means=0.6,0.9,0.8,0.1 T=3000 seeds=3 algo=oracle");
    const auto result = run_experiment(cfg, 2);
    REQUIRE(!result.rows.empty());
    for (const auto& row : result.rows) {
        CHECK(row.cum_regret_zeroed == 0.0);
        CHECK(row.collisions == 0);
    }
}

TEST_CASE("dpe runs replay byte-identically", "[harness]") {
    Config cfg = parse_config("K=5 M=2 means=0.9,0.75,0.6,0.45,0.3 T=20000 seeds=7, algo=dpe");
    REQUIRE(cfg.seeds == std::vector<std::uint64_t>{7});
    const auto a = run_single(cfg, 7, 0);
    const auto b = run_single(cfg, 7, 0);
    CHECK(rows_to_csv(a.rows) == rows_to_csv(b.rows));
    CHECK(a.init_duration == b.init_duration);
    CHECK(a.comm_phases == b.comm_phases);
}

TEST_CASE("random control collides and accumulates linear regret", "[harness]") {
    Config cfg = parse_config("K=4 M=2 means=0.9,0.8,0.7,0.6 T=5000 seeds=2 algo=random");
    const auto result = run_experiment(cfg, 2);
    for (const auto& run : result.runs) {
        CHECK(run.counters.collisions > 0);
        CHECK(run.rows.back().cum_regret_zeroed > 500.0);
    }
}

TEST_CASE("dpe trace columns are consistent", "[harness]") {
    Config cfg = parse_config("K=6 M=3 means=0.9,0.8,0.7,0.6,0.5,0.4 T=30000 seeds=5 algo=dpe");
    const auto result = run_experiment(cfg, 2);
    for (const auto& run : result.runs) {
        REQUIRE(!run.aborted);
        CHECK(run.instrumentation_violations == 0);
        // one communication phase is (M-1)(M+K+1) rounds, exactly
        CHECK(run.counters.comm_rounds == run.comm_phases * (cfg.M - 1) * (cfg.M + cfg.K + 1));
        // phases are bounded by twice the off-target round count
        CHECK(run.comm_phases <= 2 * run.counters.tally_A);
        double prev_zeroed = -1.0;
        for (const auto& row : run.rows) {
            CHECK(row.cum_regret_zeroed >= prev_zeroed);
            prev_zeroed = row.cum_regret_zeroed;
            CHECK(row.init_rounds == run.init_duration);
            CHECK(row.cum_regret_zeroed >= 0.0);
        }
    }
    // summary means sit between per-seed extremes
    const auto& stats = result.summary.columns.at("cum_regret_zeroed").back();
    double lo = 1e18, hi = -1e18;
    for (const auto& run : result.runs) {
        lo = std::min(lo, run.rows.back().cum_regret_zeroed);
        hi = std::max(hi, run.rows.back().cum_regret_zeroed);
    }
    CHECK(stats.mean >= lo);
    CHECK(stats.mean <= hi);
}

TEST_CASE("csv writing and reading round-trip", "[harness]") {
    Config cfg = parse_config("K=3 M=2 means=0.9,0.8,0.7 T=500 seeds=2 algo=oracle");
    const auto result = run_experiment(cfg, 1);
    TempFile csv("roundtrip.csv");
    csv.write(rows_to_csv(result.rows));
    const auto rows = dpe::read_trace_csv(csv.path);
    REQUIRE(rows.size() == result.rows.size());
    CHECK(rows[0].algorithm == "oracle");
    CHECK(rows[0].K == 3);
    CHECK(rows.back().t == 500);
}

TEST_CASE("csv reader rejects malformed input with a row number", "[harness]") {
    TempFile empty("empty.csv");
    empty.write("");
    CHECK_THROWS_AS(dpe::read_trace_csv(empty.path), dpe::csv_error);

    TempFile header_only("header.csv");
    header_only.write(std::string(dpe::kTraceHeader) + "\n");
    CHECK_THROWS_AS(dpe::read_trace_csv(header_only.path), dpe::csv_error);

    TempFile bad_row("bad.csv");
    bad_row.write(std::string(dpe::kTraceHeader) + "\n0,1,dpe,3,2,nonsense\n");
    try {
        dpe::read_trace_csv(bad_row.path);
        FAIL("expected csv_error");
    } catch (const dpe::csv_error& e) {
        CHECK(e.row() == 2);
    }
}

TEST_CASE("plots render deterministically with a reference line", "[harness]") {
    Config cfg = parse_config("K=3 M=2 means=0.9,0.8,0.7 T=2000 seeds=2 algo=oracle");
    const auto result = run_experiment(cfg, 1);
    TempFile csv("plot.csv");
    csv.write(rows_to_csv(result.rows));
    TempFile svg1("plot1.svg"), svg2("plot2.svg");
    dpe::emit_plot(csv.path, svg1.path, 3.55);
    dpe::emit_plot(csv.path, svg2.path, 3.55);
    const std::string rendered = svg1.read();
    CHECK(rendered == svg2.read());
    CHECK(rendered.find("<svg") != std::string::npos);
    CHECK(rendered.find("polyline") != std::string::npos);
    CHECK(rendered.find("oracle") != std::string::npos);
    CHECK(rendered.find("C · ln(t)") != std::string::npos);
}

TEST_CASE("lemma report covers both families and passes", "[harness][slow]") {
    const auto report = dpe::check_lemmas(100000, 1000, 20000, 2);
    CHECK(report.checks.size() == 9 + 9);
    CHECK(report.all_pass());
}

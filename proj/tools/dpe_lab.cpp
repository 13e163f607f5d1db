#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpe/harness.hpp"
#include "dpe/plot.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

nlohmann::json summary_json(const dpe::Config& cfg, const dpe::ExperimentResult& result) {
    nlohmann::json doc;
    doc["algorithm"] = dpe::to_string(cfg.algorithm);
    doc["K"] = cfg.K;
    doc["M"] = cfg.M;
    doc["T"] = cfg.T;
    doc["seeds"] = cfg.seeds.size();
    doc["lower_bound_constant"] = result.summary.lower_bound_constant;
    nlohmann::json checkpoints = nlohmann::json::array();
    for (std::size_t c = 0; c < result.summary.checkpoints.size(); ++c) {
        nlohmann::json entry;
        entry["t"] = result.summary.checkpoints[c];
        for (const auto& [name, stats] : result.summary.columns) {
            entry[name] = {{"mean", stats[c].mean}, {"stddev", stats[c].stddev}};
        }
        checkpoints.push_back(entry);
    }
    doc["checkpoints"] = checkpoints;
    nlohmann::json aborted = nlohmann::json::array();
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        if (result.runs[i].aborted)
            aborted.push_back({{"run_id", i}, {"reason", result.runs[i].abort_reason}});
    }
    doc["aborted_runs"] = aborted;
    return doc;
}

void write_outputs(const dpe::Config& cfg, const std::vector<dpe::TraceRow>& rows,
                   const nlohmann::json& summary, const std::string& out_path) {
    std::ofstream csv(out_path);
    if (!csv) throw std::runtime_error("cannot write " + out_path);
    csv << dpe::kTraceHeader << '\n';
    for (const auto& row : rows) dpe::write_trace_row(csv, row);
    std::ofstream side(out_path + ".summary.json");
    if (!side) throw std::runtime_error("cannot write " + out_path + ".summary.json");
    side << summary.dump(2) << '\n';
    (void)cfg;
}

int cmd_run(const std::string& config_path, const std::string& out_path) {
    dpe::Config cfg = dpe::parse_config(read_file(config_path));
    const dpe::ExperimentResult result = dpe::run_experiment(cfg);
    write_outputs(cfg, result.rows, summary_json(cfg, result), out_path);
    long aborted = 0;
    for (const auto& run : result.runs) aborted += run.aborted ? 1 : 0;
    if (aborted > 0)
        std::cerr << "warning: " << aborted << " run(s) aborted on protocol violation\n";
    const auto& zr = result.summary.columns.at("cum_regret_zeroed");
    std::cout << "algorithm=" << dpe::to_string(cfg.algorithm) << " seeds=" << cfg.seeds.size()
              << " T=" << cfg.T << " C=" << result.summary.lower_bound_constant << '\n';
    for (std::size_t c = 0; c < result.summary.checkpoints.size(); ++c)
        std::cout << "  t=" << result.summary.checkpoints[c] << " regret_mean=" << zr[c].mean
                  << " regret_stddev=" << zr[c].stddev << '\n';
    std::cout << "wrote " << out_path << " and " << out_path << ".summary.json\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<long>& horizons,
              const std::string& out_path) {
    if (horizons.empty()) throw std::runtime_error("sweep: need at least one horizon");
    dpe::Config base = dpe::parse_config(read_file(config_path));
    std::vector<dpe::TraceRow> all_rows;
    nlohmann::json summaries = nlohmann::json::array();
    long run_offset = 0;
    for (long horizon : horizons) {
        dpe::Config cfg = base;
        cfg.T = horizon;
        cfg.checkpoints.clear();
        for (long c = 100; c < cfg.T; c *= 10) cfg.checkpoints.push_back(c);
        cfg.checkpoints.push_back(cfg.T);
        dpe::ExperimentResult result = dpe::run_experiment(cfg);
        for (auto& row : result.rows) {
            row.run_id += run_offset;
            all_rows.push_back(row);
        }
        run_offset += static_cast<long>(cfg.seeds.size());
        summaries.push_back(summary_json(cfg, result));
        std::cout << "horizon " << horizon << " done\n";
    }
    nlohmann::json doc;
    doc["sweeps"] = summaries;
    write_outputs(base, all_rows, doc, out_path);
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

int cmd_check_lemmas(const std::string& out_path, long truncation, long trials, long horizon) {
    const dpe::LemmaReport report = dpe::check_lemmas(truncation, trials, horizon);
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& check : report.checks) {
        doc.push_back({{"name", check.name},
                       {"value", check.value},
                       {"bound", check.bound},
                       {"pass", check.pass}});
        std::cout << (check.pass ? "PASS " : "FAIL ") << check.name << " value=" << check.value
                  << " bound=" << check.bound << '\n';
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << doc.dump(2) << '\n';
    }
    return report.all_pass() ? 0 : 2;
}

int cmd_emit_plot(const std::string& in_path, const std::string& out_path,
                  std::optional<double> cmu, std::string summary_path) {
    std::optional<double> reference = cmu;
    if (!reference) {
        if (summary_path.empty()) summary_path = in_path + ".summary.json";
        std::ifstream side(summary_path);
        if (side) {
            nlohmann::json doc;
            side >> doc;
            if (doc.contains("lower_bound_constant"))
                reference = doc["lower_bound_constant"].get<double>();
        }
    }
    dpe::emit_plot(in_path, out_path, reference);
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiplayer bandit simulation lab (DPE, baselines, diagnostics)"};
    app.require_subcommand(1);

    std::string config_path, out_path, in_path, summary_path;
    std::vector<long> horizons;
    double cmu_value = -1.0;
    long truncation = 1000000, trials = 1000, horizon = 100000;

    CLI::App* run = app.add_subcommand("run", "run one experiment and write the trace CSV");
    run->add_option("--config", config_path, "config file (key=value)")->required();
    run->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "run the config at several horizons");
    sweep->add_option("--config", config_path, "config file (key=value)")->required();
    sweep->add_option("--horizons", horizons, "comma-separated horizon list")->required()->delimiter(',');
    sweep->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* lemmas = app.add_subcommand("check-lemmas", "numeric concentration checks");
    lemmas->add_option("--out", out_path, "JSON report path");
    lemmas->add_option("--truncation", truncation, "series truncation (default 10^6)");
    lemmas->add_option("--trials", trials, "Monte Carlo trials per grid point");
    lemmas->add_option("--horizon", horizon, "Monte Carlo horizon");

    CLI::App* plot = app.add_subcommand("emit-plot", "render regret-vs-ln(t) SVG from a trace CSV");
    plot->add_option("--in", in_path, "trace CSV")->required();
    plot->add_option("--out", out_path, "output SVG path")->required();
    plot->add_option("--cmu", cmu_value, "reference constant override");
    plot->add_option("--summary", summary_path, "summary sidecar (default <in>.summary.json)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_path);
        if (sweep->parsed()) return cmd_sweep(config_path, horizons, out_path);
        if (lemmas->parsed()) return cmd_check_lemmas(out_path, truncation, trials, horizon);
        if (plot->parsed())
            return cmd_emit_plot(in_path, out_path,
                                 cmu_value >= 0.0 ? std::optional<double>(cmu_value) : std::nullopt,
                                 summary_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

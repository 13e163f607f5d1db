#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpe/harness.hpp"

namespace dpe {

struct csv_error : std::runtime_error {
    csv_error(long row, const std::string& what)
        : std::runtime_error("csv row " + std::to_string(row) + ": " + what), row_(row) {}
    long row() const { return row_; }

private:
    long row_;
};

inline std::vector<TraceRow> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw csv_error(0, "missing header");
    if (line != kTraceHeader) throw csv_error(1, "unexpected header");
    std::vector<TraceRow> rows;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream split(line);
        while (std::getline(split, field, ',')) fields.push_back(field);
        if (fields.size() != 13) throw csv_error(line_no, "expected 13 columns");
        try {
            TraceRow row;
            row.run_id = std::stol(fields[0]);
            row.seed = std::stoull(fields[1]);
            row.algorithm = fields[2];
            row.K = std::stoi(fields[3]);
            row.M = std::stoi(fields[4]);
            row.t = std::stol(fields[5]);
            row.cum_regret_zeroed = std::stod(fields[6]);
            row.cum_regret_literal = std::stod(fields[7]);
            row.comm_phases = std::stol(fields[8]);
            row.comm_rounds = std::stol(fields[9]);
            row.init_rounds = std::stol(fields[10]);
            row.collisions = std::stol(fields[11]);
            row.set_changes = std::stol(fields[12]);
            rows.push_back(std::move(row));
        } catch (const std::exception&) {
            throw csv_error(line_no, "cannot parse numeric field");
        }
    }
    if (rows.empty()) throw csv_error(line_no, "no data rows");
    return rows;
}

namespace detail {

inline std::string format_double(double v, int precision = 2) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", precision, v);
    return buffer;
}

}  // namespace detail

// Seed-mean collision-zeroed regret against ln(t), one polyline per
// algorithm, plus the C * ln(t) reference when the constant is known. Output
// is deterministic for a fixed input.
inline void emit_plot(const std::string& csv_path, const std::string& svg_path,
                      std::optional<double> reference_constant) {
    const std::vector<TraceRow> rows = read_trace_csv(csv_path);

    // seed-mean per (algorithm, t)
    std::map<std::string, std::map<long, std::pair<double, long>>> grouped;
    for (const auto& row : rows) {
        auto& cell = grouped[row.algorithm][row.t];
        cell.first += row.cum_regret_zeroed;
        cell.second += 1;
    }

    double max_log_t = 1.0, max_regret = 1.0;
    for (const auto& [algo, series] : grouped) {
        for (const auto& [t, cell] : series) {
            max_log_t = std::max(max_log_t, std::log(static_cast<double>(t)));
            max_regret = std::max(max_regret, cell.first / cell.second);
        }
    }
    if (reference_constant)
        max_regret = std::max(max_regret, *reference_constant * max_log_t);

    const double width = 800, height = 500;
    const double ml = 70, mr = 20, mt = 30, mb = 50;
    auto x_of = [&](double log_t) { return ml + (width - ml - mr) * log_t / max_log_t; };
    auto y_of = [&](double regret) { return height - mb - (height - mt - mb) * regret / max_regret; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
        << height - mb << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << (width / 2) << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">ln(t)</text>\n";
    svg << "<text x=\"18\" y=\"" << (height / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " << (height / 2)
        << ")\">cumulative regret (collision-zeroed)</text>\n";

    for (int tick = 0; tick <= 5; ++tick) {
        const double lt = max_log_t * tick / 5.0;
        const double rg = max_regret * tick / 5.0;
        svg << "<text x=\"" << detail::format_double(x_of(lt)) << "\" y=\"" << height - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::format_double(lt, 1)
            << "</text>\n";
        svg << "<text x=\"" << ml - 8 << "\" y=\"" << detail::format_double(y_of(rg) + 4)
            << "\" text-anchor=\"end\" font-size=\"11\">" << detail::format_double(rg, 0)
            << "</text>\n";
    }

    const std::map<std::string, std::string> palette = {{"dpe", "#1f77b4"},
                                                        {"centralized", "#d62728"},
                                                        {"oracle", "#2ca02c"},
                                                        {"random", "#7f7f7f"}};
    double legend_y = mt + 10;
    for (const auto& [algo, series] : grouped) {
        const auto it = palette.find(algo);
        const std::string color = it != palette.end() ? it->second : "#8c564b";
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (const auto& [t, cell] : series) {
            svg << detail::format_double(x_of(std::log(static_cast<double>(t)))) << ','
                << detail::format_double(y_of(cell.first / cell.second)) << ' ';
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << width - mr - 150 << "\" y=\"" << legend_y << "\" font-size=\"12\" fill=\""
            << color << "\">" << algo << "</text>\n";
        legend_y += 16;
    }

    if (reference_constant) {
        svg << "<polyline fill=\"none\" stroke=\"black\" stroke-dasharray=\"6 4\" stroke-width=\"1.2\" points=\"";
        for (int step = 0; step <= 40; ++step) {
            const double lt = max_log_t * step / 40.0;
            svg << detail::format_double(x_of(lt)) << ','
                << detail::format_double(y_of(*reference_constant * lt)) << ' ';
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << width - mr - 150 << "\" y=\"" << legend_y
            << "\" font-size=\"12\" fill=\"black\">C · ln(t)</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(svg_path);
    if (!out) throw std::runtime_error("cannot write " + svg_path);
    out << svg.str();
}

}  // namespace dpe

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "serlfd/error.hpp"

namespace serlfd {

struct MetricsRow {
    int episode = 0;
    double episode_return = 0.0;
    std::size_t length = 0;
    bool success = false;
    /// Mean success over the last eval_window training episodes.
    double score = 0.0;
    double se_loss = std::nan("");
    double td_loss = std::nan("");
    double margin_loss = std::nan("");
    std::size_t rl_size = 0;
    std::size_t rl_demo_size = 0;
    std::size_t good_size = 0;
    std::size_t bad_size = 0;
    /// Greedy success rate; only set on evaluation episodes.
    double greedy_score = std::nan("");
    double wall_clock_seconds = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "episode,return,length,success,score,se_loss,td_loss,margin_loss,rl_size,rl_demo_size,good_size,bad_size,"
    "greedy_score";

namespace detail {

inline std::string fmt_number(double x) {
    if (std::isnan(x)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

}  // namespace detail

/// Writes the metrics CSV. Wall-clock times go to a separate
/// "<path>.timing.csv" so that the metrics file itself is reproducible.
inline void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write metrics " + path);
    out << kMetricsHeader << '\n';
    for (const auto& r : rows) {
        out << r.episode << ',' << detail::fmt_number(r.episode_return) << ',' << r.length << ',' << (r.success ? 1 : 0) << ','
            << detail::fmt_number(r.score) << ',' << detail::fmt_number(r.se_loss) << ','
            << detail::fmt_number(r.td_loss) << ',' << detail::fmt_number(r.margin_loss) << ',' << r.rl_size
            << ',' << r.rl_demo_size << ',' << r.good_size << ',' << r.bad_size << ','
            << detail::fmt_number(r.greedy_score) << '\n';
    }
    std::ofstream timing(path + ".timing.csv", std::ios::binary);
    if (!timing) throw Error("cannot write timing file for " + path);
    timing << "episode,wall_clock_seconds\n";
    for (const auto& r : rows) timing << r.episode << ',' << detail::fmt_number(r.wall_clock_seconds) << '\n';
}

struct MetricsTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw Error("metrics file has no column '" + name + "'");
    }
    std::vector<double> numbers(const std::string& name) const {
        const auto c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.at(c).empty() ? std::nan("") : std::stod(r.at(c)));
        return out;
    }
};

inline MetricsTable read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read metrics " + path);
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        return cells;
    };
    MetricsTable t;
    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": empty metrics file");
    t.columns = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.columns.size()) throw Error(path + ": ragged row");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

}  // namespace serlfd

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "serlfd/harness/metrics.hpp"

namespace serlfd {

struct AggregateRow {
    int episode = 0;
    double mean_score = 0.0;
    double std_score = 0.0;
};

/// Per-episode mean and population standard deviation across series.
/// Series of unequal length are truncated to the shortest; a warning is
/// appended when that happens.
inline std::vector<AggregateRow> aggregate_series(const std::vector<std::vector<double>>& series,
                                                  std::vector<std::string>* warnings = nullptr) {
    require(!series.empty(), "aggregate: need at least one series");
    std::size_t n = series.front().size();
    bool ragged = false;
    for (const auto& s : series) {
        if (s.size() != n) ragged = true;
        n = std::min(n, s.size());
    }
    if (ragged && warnings) warnings->push_back("series lengths differ; truncated to " + std::to_string(n) + " episodes");
    std::vector<AggregateRow> out(n);
    const double count = static_cast<double>(series.size());
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& s : series) sum += s[i];
        const double mean = sum / count;
        double sq = 0.0;
        for (const auto& s : series) sq += (s[i] - mean) * (s[i] - mean);
        out[i] = {static_cast<int>(i + 1), mean, std::sqrt(sq / count)};
    }
    return out;
}

/// "se_full_seed3.csv" -> "se_full".
inline std::string variant_of(const std::string& path) {
    std::string stem = std::filesystem::path(path).stem().string();
    const auto pos = stem.rfind("_seed");
    return pos == std::string::npos ? stem : stem.substr(0, pos);
}

/// Groups metrics files by variant and writes "<out_dir>/<variant>_aggregate.csv"
/// for each. Returns the written paths.
inline std::vector<std::string> plot_export(const std::vector<std::string>& metrics_files, const std::string& out_dir,
                                            std::vector<std::string>* warnings = nullptr) {
    require(!metrics_files.empty(), "aggregate: no metrics files given");
    std::map<std::string, std::vector<std::vector<double>>> groups;
    for (const auto& f : metrics_files) groups[variant_of(f)].push_back(read_metrics(f).numbers("score"));
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;
    for (const auto& [variant, series] : groups) {
        std::vector<std::string> local;
        const auto rows = aggregate_series(series, &local);
        if (warnings)
            for (const auto& w : local) warnings->push_back(variant + ": " + w);
        const auto path = (std::filesystem::path(out_dir) / (variant + "_aggregate.csv")).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path);
        out << "episode,mean_score,std_score\n";
        for (const auto& r : rows)
            out << r.episode << ',' << detail::fmt_number(r.mean_score) << ',' << detail::fmt_number(r.std_score) << '\n';
        written.push_back(path);
    }
    return written;
}

}  // namespace serlfd

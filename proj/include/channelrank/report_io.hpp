#pragma once

#include "channelrank/aggregation.hpp"
#include "channelrank/evaluation.hpp"
#include "channelrank/format.hpp"
#include "channelrank/rankers.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace channelrank {

using OrderedJson = nlohmann::ordered_json;

inline std::string_view to_string(NeighborMode mode) { return mode == NeighborMode::nearest ? "nearest" : "random"; }
inline std::string_view to_string(ProbeOrder order) { return order == ProbeOrder::cycled ? "cycled" : "random"; }

inline OrderedJson params_to_json(const RankerConfig& config)
{
    OrderedJson params;
    switch (config.method) {
    case RankMethod::relief:
        if (config.relief.iterations) {
            params["iterations"] = *config.relief.iterations;
        } else {
            params["iterations"] = "all";
        }
        params["neighbor_mode"] = to_string(config.relief.neighbor_mode);
        params["probe_order"] = to_string(config.relief.probe_order);
        params["seed"] = config.relief.seed;
        break;
    case RankMethod::mrmr:
        params["scheme"] =
            config.mrmr.scheme.kind == DiscretizationScheme::Kind::mean_std ? "mean_std" : "equal_width";
        params["bins"] = config.mrmr.scheme.levels;
        params["log_base"] = 2;
        break;
    case RankMethod::laplacian:
        params["k_neighbors"] = config.laplacian.k_neighbors;
        if (config.laplacian.kernel_width) {
            params["kernel_width"] = *config.laplacian.kernel_width;
        } else {
            params["kernel_width"] = "auto";
        }
        params["subsample_cap"] = config.laplacian.subsample_cap;
        params["seed"] = config.laplacian.seed;
        break;
    }
    return params;
}

/// Non-finite scores (the Laplacian sentinel) are written as null.
inline OrderedJson scores_to_json(const std::vector<double>& scores)
{
    OrderedJson out = OrderedJson::array();
    for (double s : scores) {
        if (std::isfinite(s)) {
            out.push_back(s);
        } else {
            out.push_back(nullptr);
        }
    }
    return out;
}

inline OrderedJson ranking_to_json(const RankingList& ranking, const RankerConfig& config)
{
    OrderedJson doc;
    doc["method"] = to_string(ranking.method);
    doc["params"] = params_to_json(config);
    doc["order"] = ranking.order;
    doc["scores"] = scores_to_json(ranking.scores);
    if (!ranking.warnings.empty()) {
        doc["warnings"] = ranking.warnings;
    }
    return doc;
}

inline OrderedJson aggregation_to_json(const RankMatrix& ranks, const AggregatedRanking& fused,
                                       const RankerConfig& config)
{
    OrderedJson doc;
    doc["method"] = to_string(config.method);
    doc["params"] = params_to_json(config);
    doc["trial_ids"] = ranks.trial_ids();
    doc["rank_matrix"] = ranks.columns();
    doc["positional"] = fused.positional;
    doc["final"] = fused.final;
    return doc;
}

inline void write_json(const std::filesystem::path& path, const OrderedJson& doc)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
}

/// Channel order from a ranking file: `final` of an aggregation, else `order`.
inline std::vector<ChannelId> read_ranking_order(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open ranking file " + path.string());
    }
    try {
        const nlohmann::json doc = nlohmann::json::parse(in);
        if (doc.contains("final")) {
            return doc.at("final").get<std::vector<ChannelId>>();
        }
        return doc.at("order").get<std::vector<ChannelId>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("ranking file " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV

struct ReportRow {
    std::string dataset;
    std::string method;
    std::string setting;
    std::string classifier;
    std::optional<ExperimentReport> report; ///< unset when the combination failed
    std::string error;
};

inline std::string report_csv_header()
{
    return "dataset,method,setting,classifier,selected,ca,baseline_ca,rho,flag,status";
}

inline std::string csv_escape(const std::string& text)
{
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') {
            out += '"';
        }
        out += c == '\n' ? ' ' : c;
    }
    out += '"';
    return out;
}

inline std::string report_csv_line(const ReportRow& row, Precision precision)
{
    std::ostringstream line;
    line << csv_escape(row.dataset) << ',' << row.method << ',' << row.setting << ',' << row.classifier << ',';
    if (row.report) {
        const ExperimentReport& r = *row.report;
        line << format_number(r.selected, precision) << ',' << format_number(r.ca, precision) << ','
             << format_number(r.baseline_ca, precision) << ',' << format_number(r.rho, precision) << ','
             << (r.single_feature ? "single_feature" : "") << ",ok";
    } else {
        line << ",,,,," << csv_escape("error: " + row.error);
    }
    return line.str();
}

inline void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows,
                             Precision precision)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << report_csv_header() << '\n';
    for (const ReportRow& row : rows) {
        out << report_csv_line(row, precision) << '\n';
    }
}

/// Per-n accuracy curve: `n,accuracy` for one sweep, `trial,n,accuracy` for horizontal runs.
inline void write_curve_csv(const std::filesystem::path& path, const ExperimentReport& report, Precision precision)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    if (report.sweep) {
        out << "n,accuracy\n";
        for (const SweepPoint& p : report.sweep->per_n) {
            out << p.n << ',' << format_number(p.accuracy, precision) << '\n';
        }
        return;
    }
    out << "trial,n,accuracy\n";
    for (const TrialOutcome& trial : report.trials) {
        for (const SweepPoint& p : trial.sweep.per_n) {
            out << trial.trial_index << ',' << p.n << ',' << format_number(p.accuracy, precision) << '\n';
        }
    }
}

/// Per-trial bests of a horizontal run: the rows the report means are taken over.
inline void write_trials_csv(const std::filesystem::path& path, const ExperimentReport& report, Precision precision)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "trial,best_n,best_accuracy,baseline_accuracy\n";
    for (const TrialOutcome& trial : report.trials) {
        out << trial.trial_index << ',' << trial.sweep.best_n << ','
            << format_number(trial.sweep.best_accuracy, precision) << ','
            << format_number(trial.sweep.baseline_accuracy, precision) << '\n';
    }
}

} // namespace channelrank

#include "concurrence/report_io.hpp"

#include <cstdio>
#include <fstream>

namespace fs = std::filesystem;

namespace concurrence {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::string& content, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw DataError("I/O failure while writing '" + path.string() + "'");
}

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in '" + path.string() + "': " + e.what());
    }
    return doc;
}

void write_json_file(const nlohmann::json& doc, const fs::path& path) {
    write_text_file(doc.dump(2) + "\n", path);
}

nlohmann::json report_to_json(const DependenceReport& report) {
    nlohmann::json doc;
    doc["accuracy"] = report.accuracy;
    doc["coefficient"] = report.coefficient;
    doc["unclipped_coefficient"] = report.unclipped_coefficient;
    if (report.p_value) doc["p_value"] = *report.p_value;
    doc["n_segments_evaluated"] = report.n_segments_evaluated;
    doc["seed"] = report.seed;
    doc["w"] = report.w;
    doc["folds"] = report.folds;
    doc["mean_fold_coefficient"] = report.mean_fold_coefficient;
    doc["per_fold"] = nlohmann::json::array();
    for (const auto& fr : report.per_fold)
        doc["per_fold"].push_back({{"fold", fr.fold},
                                   {"accuracy", fr.accuracy},
                                   {"coefficient", fr.coefficient},
                                   {"unclipped", fr.unclipped},
                                   {"n_segments", fr.n_segments}});
    if (!report.null_stats.empty()) doc["null_stats"] = report.null_stats;
    return doc;
}

DependenceReport report_from_json(const nlohmann::json& doc) {
    DependenceReport report;
    report.accuracy = doc.at("accuracy").get<double>();
    report.coefficient = doc.at("coefficient").get<double>();
    report.unclipped_coefficient = doc.at("unclipped_coefficient").get<double>();
    if (doc.contains("p_value")) report.p_value = doc["p_value"].get<double>();
    report.n_segments_evaluated = doc.at("n_segments_evaluated").get<long>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.w = doc.at("w").get<int>();
    report.folds = doc.at("folds").get<int>();
    report.mean_fold_coefficient = doc.at("mean_fold_coefficient").get<double>();
    for (const auto& entry : doc.at("per_fold")) {
        FoldReport fr;
        fr.fold = entry.at("fold").get<int>();
        fr.accuracy = entry.at("accuracy").get<double>();
        fr.coefficient = entry.at("coefficient").get<double>();
        fr.unclipped = entry.at("unclipped").get<double>();
        fr.n_segments = entry.at("n_segments").get<long>();
        report.per_fold.push_back(fr);
    }
    if (doc.contains("null_stats"))
        report.null_stats = doc["null_stats"].get<std::vector<double>>();
    return report;
}

void write_report_json(const DependenceReport& report, const fs::path& path) {
    write_json_file(report_to_json(report), path);
}

DependenceReport read_report_json(const fs::path& path) {
    return report_from_json(read_json_file(path));
}

void write_report_csv(const DependenceReport& report, const fs::path& path) {
    std::string csv = "accuracy,coefficient,unclipped_coefficient,p_value,"
                      "n_segments_evaluated,seed,w,folds\n";
    csv += format_double(report.accuracy) + "," + format_double(report.coefficient) + "," +
           format_double(report.unclipped_coefficient) + "," +
           (report.p_value ? format_double(*report.p_value) : std::string()) + "," +
           std::to_string(report.n_segments_evaluated) + "," + std::to_string(report.seed) + "," +
           std::to_string(report.w) + "," + std::to_string(report.folds) + "\n";
    csv += "\nfold,accuracy,coefficient,unclipped,n_segments\n";
    for (const auto& fr : report.per_fold)
        csv += std::to_string(fr.fold) + "," + format_double(fr.accuracy) + "," +
               format_double(fr.coefficient) + "," + format_double(fr.unclipped) + "," +
               std::to_string(fr.n_segments) + "\n";
    write_text_file(csv, path);
}

void write_pscs_csv(const std::vector<PSCSTrace>& traces, const fs::path& path) {
    std::string csv = "pair_id,t,score\n";
    for (const auto& trace : traces)
        for (std::size_t i = 0; i < trace.origins.size(); ++i)
            csv += trace.pair_id + "," + std::to_string(trace.origins[i]) + "," +
                   format_double(trace.scores[i]) + "\n";
    write_text_file(csv, path);
}

void write_history_csv(const TrainingHistory& history, const fs::path& path) {
    std::string csv = "iteration,train_loss,val_loss\n";
    for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
        csv += std::to_string(i) + "," + format_double(history.train_loss[i]) + ",";
        if (i < history.val_loss.size()) csv += format_double(history.val_loss[i]);
        csv += "\n";
    }
    write_text_file(csv, path);
}

nlohmann::json baseline_to_json(const BaselineResult& result) {
    nlohmann::json doc;
    doc["method"] = result.method;
    doc["dataset_statistic"] = result.dataset_statistic;
    doc["p_value"] = result.p_value;
    doc["per_pair_statistic"] = result.per_pair_statistic;
    doc["null_stats"] = result.null_stats;
    doc["params"] = result.params;
    return doc;
}

void write_baselines_json(const std::vector<BaselineResult>& results, const fs::path& path) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : results) doc.push_back(baseline_to_json(r));
    write_json_file(doc, path);
}

void write_baselines_csv(const std::vector<BaselineResult>& results, const fs::path& path) {
    std::string csv = "method,dataset_statistic,p_value\n";
    for (const auto& r : results)
        csv += r.method + "," + format_double(r.dataset_statistic) + "," +
               format_double(r.p_value) + "\n";
    write_text_file(csv, path);
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) return {};
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t c = 0; c < row.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());
    }
    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            out += rows[r][c];
            if (c + 1 < rows[r].size())
                out += std::string(widths[c] - rows[r][c].size() + 2, ' ');
        }
        out += '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < widths.size(); ++c)
                total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
            out += std::string(total, '-') + '\n';
        }
    }
    return out;
}

}  // namespace concurrence

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "concurrence/baselines.hpp"
#include "concurrence/evaluation.hpp"

namespace concurrence {

nlohmann::json report_to_json(const DependenceReport& report);
DependenceReport report_from_json(const nlohmann::json& doc);

void write_report_json(const DependenceReport& report, const std::filesystem::path& path);
DependenceReport read_report_json(const std::filesystem::path& path);

/// Headline numbers as a one-row CSV, fold rows appended below.
void write_report_csv(const DependenceReport& report, const std::filesystem::path& path);

void write_pscs_csv(const std::vector<PSCSTrace>& traces, const std::filesystem::path& path);

void write_history_csv(const TrainingHistory& history, const std::filesystem::path& path);

nlohmann::json baseline_to_json(const BaselineResult& result);
void write_baselines_json(const std::vector<BaselineResult>& results,
                          const std::filesystem::path& path);
void write_baselines_csv(const std::vector<BaselineResult>& results,
                         const std::filesystem::path& path);

/// Fixed-width text table; rows of cells, first row treated as the header.
std::string render_table(const std::vector<std::vector<std::string>>& rows);

/// %.17g, the round-trip-exact float format used in all CSV output.
std::string format_double(double v);

void write_text_file(const std::string& content, const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace concurrence

#pragma once

#include "npplab/harness.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace npplab {

enum class ReportFormat { csv, json };

// csv for *.csv, json for *.json; ConfigError otherwise.
ReportFormat report_format_for(const std::filesystem::path& path);

// Columns: repeat,fold,poison_subject,test_subject,n_train,n_poison,acc,asr,config_fingerprint
// Reals are printed with 17 significant digits.
std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format);
void write_report(const std::vector<ResultRow>& rows, const std::filesystem::path& path, ReportFormat format);
std::vector<ResultRow> parse_report_csv(const std::string& text);

std::string format_sweep(const SweepTable& table, ReportFormat format);
void write_sweep_report(const SweepTable& table, const std::filesystem::path& path, ReportFormat format);

}  // namespace npplab

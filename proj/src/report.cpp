#include "npplab/report.hpp"

#include "npplab/dataset_io.hpp"
#include "npplab/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace npplab {
namespace {

constexpr const char* kColumns = "repeat,fold,poison_subject,test_subject,n_train,n_poison,acc,asr,config_fingerprint";

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string joined(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + real(v[i]);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

ReportFormat report_format_for(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".csv") return ReportFormat::csv;
  if (ext == ".json") return ReportFormat::json;
  throw ConfigError("cannot infer report format from '" + path.string() + "' (use .csv or .json)");
}

std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format) {
  if (rows.empty()) throw ConfigError("no result rows to report");
  if (format == ReportFormat::json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ResultRow& r : rows) {
      nlohmann::json o;
      o["repeat"] = r.repeat;
      o["fold"] = r.fold;
      o["poison_subject"] = r.poison_subject;
      o["test_subject"] = r.test_subject;
      o["n_train"] = r.n_train;
      o["n_poison"] = r.n_poison;
      o["acc"] = r.acc;
      o["asr"] = r.asr;
      o["config_fingerprint"] = r.config_fingerprint;
      arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
  }
  std::ostringstream out;
  out << kColumns << '\n';
  for (const ResultRow& r : rows) {
    out << r.repeat << ',' << r.fold << ',' << r.poison_subject << ',' << r.test_subject << ',' << r.n_train << ','
        << r.n_poison << ',' << real(r.acc) << ',' << real(r.asr) << ',' << r.config_fingerprint << '\n';
  }
  return out.str();
}

void write_report(const std::vector<ResultRow>& rows, const std::filesystem::path& path, ReportFormat format) {
  write_text(path, format_report(rows, format));
}

std::vector<ResultRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kColumns) throw ConfigError("report CSV header mismatch");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw ConfigError("report CSV row has " + std::to_string(f.size()) + " fields");
    ResultRow r;
    r.repeat = std::stoull(f[0]);
    r.fold = std::stoull(f[1]);
    r.poison_subject = static_cast<std::uint32_t>(std::stoul(f[2]));
    r.test_subject = static_cast<std::uint32_t>(std::stoul(f[3]));
    r.n_train = std::stoull(f[4]);
    r.n_poison = std::stoull(f[5]);
    r.acc = std::strtod(f[6].c_str(), nullptr);
    r.asr = std::strtod(f[7].c_str(), nullptr);
    r.config_fingerprint = f[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_sweep(const SweepTable& table, ReportFormat format) {
  if (table.cells.empty()) throw ConfigError("empty sweep table");
  if (format == ReportFormat::json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SweepCell& c : table.cells) {
      nlohmann::json o;
      o["axis"] = to_string(table.axis);
      o["mode"] = to_string(table.mode);
      o["train_value"] = c.train_value;
      o["test_value"] = c.test_value;
      o["n"] = c.summary.n;
      o["acc_mean"] = c.summary.acc_mean;
      o["acc_std"] = c.summary.acc_std;
      o["asr_mean"] = c.summary.asr_mean;
      o["asr_std"] = c.summary.asr_std;
      arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "axis,mode,train_value,test_value,n,acc_mean,acc_std,asr_mean,asr_std\n";
  for (const SweepCell& c : table.cells) {
    out << to_string(table.axis) << ',' << to_string(table.mode) << ',' << joined(c.train_value) << ','
        << joined(c.test_value) << ',' << c.summary.n << ',' << real(c.summary.acc_mean) << ','
        << real(c.summary.acc_std) << ',' << real(c.summary.asr_mean) << ',' << real(c.summary.asr_std) << '\n';
  }
  return out.str();
}

void write_sweep_report(const SweepTable& table, const std::filesystem::path& path, ReportFormat format) {
  write_text(path, format_sweep(table, format));
}

}  // namespace npplab

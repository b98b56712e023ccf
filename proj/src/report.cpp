#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "asymbpe/error.hpp"
#include "asymbpe/orchestrator.hpp"
#include "asymbpe/text_io.hpp"

namespace asymbpe::orchestrator {

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

std::vector<std::string_view> split_tabs(std::string_view row) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = row.find('\t', start);
    fields.push_back(row.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::size_t parse_size(std::string_view field, std::string_view name) {
  std::size_t value = 0;
  if (field.empty()) throw Error("results row: empty " + std::string(name));
  for (char c : field) {
    if (c < '0' || c > '9') throw Error("results row: invalid " + std::string(name) + " '" + std::string(field) + "'");
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return value;
}

std::optional<double> parse_optional_double(std::string_view field, std::string_view name) {
  if (field.empty() || field == "-" || field == "NA") return std::nullopt;
  try {
    std::size_t used = 0;
    const std::string s(field);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error("results row: invalid " + std::string(name) + " '" + std::string(field) + "'");
  }
}

using CellKey = std::tuple<std::string, std::size_t, std::string>;  // direction, size, testset

}  // namespace

std::string RunRecord::key() const {
  return direction + "\t" + std::to_string(size) + "\t" + std::to_string(rep) + "\t" + testset + "\t" + config.label();
}

sweep::SystemResult RunRecord::system_result() const {
  if (status != RunStatus::ok || !chrf) throw Error("run " + key() + " has no score");
  return sweep::SystemResult{config, direction, size, testset, *chrf, p_vs_baseline};
}

std::string to_tsv_row(const RunRecord& r) {
  std::ostringstream out;
  out << r.config.label() << '\t' << r.config.src_nmo << '\t' << r.config.tgt_nmo << '\t' << r.direction << '\t'
      << r.size << '\t' << r.rep << '\t' << r.testset << '\t' << (r.chrf ? fixed(*r.chrf, 2) : "-") << '\t'
      << (r.p_vs_baseline ? fixed(*r.p_vs_baseline, 4) : "-") << '\t'
      << (r.status == RunStatus::ok ? "ok" : "failed");
  return out.str();
}

RunRecord parse_tsv_row(std::string_view row) {
  const auto f = split_tabs(row);
  if (f.size() != 10) throw Error("results row: expected 10 fields, got " + std::to_string(f.size()));
  RunRecord r;
  r.config = sweep::BpeConfig{parse_size(f[1], "src_nmo"), parse_size(f[2], "tgt_nmo")};
  if (sweep::BpeConfig::parse(f[0]) != r.config) {
    throw Error("results row: config '" + std::string(f[0]) + "' disagrees with its NMO columns");
  }
  r.direction = f[3];
  r.size = parse_size(f[4], "size");
  r.rep = parse_size(f[5], "rep");
  r.testset = f[6];
  r.chrf = parse_optional_double(f[7], "chrf");
  r.p_vs_baseline = parse_optional_double(f[8], "p_vs_baseline");
  if (f[9] == "ok") {
    r.status = RunStatus::ok;
    if (!r.chrf) throw Error("results row: completed run without a score");
  } else if (f[9] == "failed") {
    r.status = RunStatus::failed;
    r.chrf.reset();
  } else {
    throw Error("results row: invalid status '" + std::string(f[9]) + "'");
  }
  return r;
}

std::vector<RunRecord> read_results(const fs::path& path, bool latest_only) {
  const auto lines = io::read_lines(path);
  if (lines.empty() || lines.front() != kResultsHeader) throw Error(path.string() + ": missing results header");
  std::vector<RunRecord> records;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    RunRecord r;
    try {
      r = parse_tsv_row(lines[i]);
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    if (latest_only) {
      auto [it, inserted] = index.try_emplace(r.key(), records.size());
      if (!inserted) {
        records[it->second] = std::move(r);
        continue;
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_results(const fs::path& path, const std::vector<RunRecord>& records) {
  std::string content(kResultsHeader);
  content += '\n';
  for (const auto& r : records) content += to_tsv_row(r) + "\n";
  io::write_file_atomic(path, content);
}

ReportBundle emit_report(const std::vector<RunRecord>& records, const fs::path& out_dir,
                         const sweep::TierOptions& tier_options) {
  const bool any_ok = std::any_of(records.begin(), records.end(), [](const RunRecord& r) { return r.status == RunStatus::ok; });
  if (!any_ok) throw Error("report: no completed runs");
  fs::create_directories(out_dir);

  ReportBundle bundle;
  bundle.results_tsv = out_dir / "results.tsv";
  bundle.tiers_tsv = out_dir / "tiers.tsv";
  bundle.tiers_txt = out_dir / "tiers.txt";
  bundle.max_trace_tsv = out_dir / "max_trace.tsv";
  bundle.summary_tsv = out_dir / "summary.tsv";
  write_results(bundle.results_tsv, records);

  // Mean score per configuration across repetitions of the same cell.
  struct Accumulator {
    double sum = 0.0;
    std::size_t n = 0;
    std::optional<double> p;
  };
  std::map<CellKey, std::map<sweep::BpeConfig, Accumulator>> cells;
  for (const auto& r : records) {
    if (r.status != RunStatus::ok) continue;
    auto& acc = cells[{r.direction, r.size, r.testset}][r.config];
    acc.sum += *r.chrf;
    acc.p = acc.n == 0 ? r.p_vs_baseline : std::nullopt;
    ++acc.n;
  }

  std::string summary = "direction\tsize\ttestset\tconfig\tsrc_nmo\ttgt_nmo\trepetitions\tmean_chrf\n";
  std::string tiers_tsv = "direction\tsize\ttestset\ttier\tsrc\ttgt\tchrf\tdelta\tbold\tsig\n";
  std::string tiers_txt;
  std::string trace = "direction\tsize\ttestset\tsrc_nmo\tbest_tgt_nmo\tmax_chrf\n";

  for (const auto& [cell, configs] : cells) {
    const auto& [direction, size, testset] = cell;
    const std::string prefix = direction + "\t" + std::to_string(size) + "\t" + testset + "\t";
    std::vector<sweep::SystemResult> results;
    for (const auto& [config, acc] : configs) {
      const double mean = acc.sum / static_cast<double>(acc.n);
      results.push_back(sweep::SystemResult{config, direction, size, testset, mean, acc.p});
      summary += prefix + config.label() + "\t" + std::to_string(config.src_nmo) + "\t" +
                 std::to_string(config.tgt_nmo) + "\t" + std::to_string(acc.n) + "\t" + fixed(mean, 2) + "\n";
    }
    for (const auto& point : sweep::max_trace(results)) {
      trace += prefix + std::to_string(point.src_nmo) + "\t" + std::to_string(point.best_tgt_nmo) + "\t" +
               fixed(point.max_score, 2) + "\n";
    }
    try {
      auto report = sweep::tier_report(results, tier_options);
      std::istringstream rows(sweep::format_tier_tsv(report, false));
      for (std::string line; std::getline(rows, line);) tiers_tsv += prefix + line + "\n";
      if (!tiers_txt.empty()) tiers_txt += "\n";
      tiers_txt += sweep::format_tier_text(report);
      bundle.tiers.push_back(std::move(report));
    } catch (const Error& e) {
      bundle.skipped_cells.push_back(direction + "/" + std::to_string(size) + "/" + testset + ": " + e.what());
    }
  }
  for (const auto& s : bundle.skipped_cells) {
    if (!tiers_txt.empty()) tiers_txt += "\n";
    tiers_txt += "no tier report for " + s + "\n";
  }

  io::write_file_atomic(bundle.tiers_tsv, tiers_tsv);
  io::write_file_atomic(bundle.tiers_txt, tiers_txt);
  io::write_file_atomic(bundle.max_trace_tsv, trace);
  io::write_file_atomic(bundle.summary_tsv, summary);
  return bundle;
}

}  // namespace asymbpe::orchestrator

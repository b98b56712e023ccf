#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "asymbpe/chrf.hpp"
#include "asymbpe/sweep.hpp"

namespace asymbpe::orchestrator {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

struct SplitPaths {
  fs::path src;
  fs::path tgt;
};

struct TestSet {
  std::string name;
  SplitPaths paths;
};

struct DirectionSpec {
  std::string source_lang;
  std::string target_lang;
  SplitPaths train;
  SplitPaths valid;
  std::vector<TestSet> tests;

  std::string label() const { return source_lang + "-" + target_lang; }
};

// A shell command with {placeholder} slots. Each placeholder may appear at
// most once and {hyp_out} is mandatory.
class BackendCommand {
 public:
  static constexpr std::array<std::string_view, 7> kPlaceholders = {
      "train_src", "train_tgt", "valid_src", "valid_tgt", "test_src", "model_dir", "hyp_out"};

  BackendCommand() = default;
  BackendCommand(std::string command_template, std::chrono::seconds timeout);

  const std::string& command_template() const { return template_; }
  std::chrono::seconds timeout() const { return timeout_; }

  // Substitutes shell-quoted paths; `values` is indexed like kPlaceholders.
  std::string render(const std::array<std::string, 7>& values) const;

 private:
  std::string template_;
  std::chrono::seconds timeout_{0};
};

enum class BackendKind { command, echo_reference, identity_copy };

struct BackendSpec {
  BackendKind kind = BackendKind::echo_reference;
  BackendCommand command;
};

struct ExperimentConfig {
  std::vector<DirectionSpec> directions;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> nmo_set;
  BackendSpec backend;
  fs::path output_dir;
  std::uint64_t seed = 1;
  std::size_t repetitions = 1;
  std::size_t workers = 1;
  std::size_t iterations = 10000;
  std::size_t granularity = 10;
  std::vector<std::size_t> bin_upper_bounds;
  chrf::ChrfParams chrf;

  std::size_t planned_runs() const;
};

// Parses and validates a schema-1 experiment config. Relative paths resolve
// against `base_dir`. Errors name the offending field.
ExperimentConfig parse_experiment(const nlohmann::json& doc, const fs::path& base_dir);
ExperimentConfig load_experiment(const fs::path& path);

// Everything a backend invocation needs. Paths point at segmented files
// except `test_ref`, which is the raw test reference.
struct BackendJob {
  sweep::BpeConfig config;
  fs::path train_src, train_tgt, valid_src, valid_tgt, test_src;
  fs::path test_tgt_segmented;
  fs::path test_ref;
  fs::path model_dir;
  fs::path hyp_out;
};

struct BackendOutcome {
  int exit_status = 0;
  std::string message;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Must write one segmented hypothesis per test line to job.hyp_out.
  virtual BackendOutcome run(const BackendJob& job) = 0;
};

// Copies the segmented test reference: every configuration scores 100.
class EchoReferenceBackend final : public Backend {
 public:
  BackendOutcome run(const BackendJob& job) override;
};

// Copies the segmented test source.
class IdentityCopyBackend final : public Backend {
 public:
  BackendOutcome run(const BackendJob& job) override;
};

// Runs the rendered template through /bin/sh with the parent environment.
class CommandBackend final : public Backend {
 public:
  explicit CommandBackend(BackendCommand command) : command_(std::move(command)) {}
  BackendOutcome run(const BackendJob& job) override;

 private:
  BackendCommand command_;
};

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

enum class RunStatus { ok, failed };

struct RunRecord {
  sweep::BpeConfig config;
  std::string direction;
  std::size_t size = 0;
  std::size_t rep = 0;
  std::string testset;
  std::uint64_t seed = 0;
  std::optional<double> chrf;
  std::optional<double> p_vs_baseline;
  RunStatus status = RunStatus::failed;
  std::string failure_reason;
  int exit_status = 0;
  std::string started_at;
  std::string finished_at;
  fs::path src_table, tgt_table, hypothesis;

  // Identity of a run within a sweep: direction, size, rep, testset, config.
  std::string key() const;
  sweep::SystemResult system_result() const;
};

inline constexpr std::string_view kResultsHeader =
    "config\tsrc_nmo\ttgt_nmo\tdirection\tsize\trep\ttestset\tchrf\tp_vs_baseline\tstatus";

std::string to_tsv_row(const RunRecord& record);
RunRecord parse_tsv_row(std::string_view row);
// Reads results.tsv; the header is required. Later rows for the same key
// supersede earlier ones only when `latest_only` is set.
std::vector<RunRecord> read_results(const fs::path& path, bool latest_only = true);
void write_results(const fs::path& path, const std::vector<RunRecord>& records);

struct SweepOptions {
  bool resume = false;
  std::optional<std::size_t> workers;
  // Replaces the configured backend, e.g. with a test double.
  std::shared_ptr<Backend> backend;
};

// Executes the whole grid and appends one row per (config, testset) to
// <output_dir>/results.tsv. Returns every record of the sweep, including ones
// carried over from a previous run when resuming.
std::vector<RunRecord> run_sweep(const ExperimentConfig& config, const SweepOptions& options = {});

struct ReportBundle {
  fs::path results_tsv;
  fs::path tiers_tsv;
  fs::path tiers_txt;
  fs::path max_trace_tsv;
  fs::path summary_tsv;
  std::vector<sweep::TierReport> tiers;
  // Cells for which no tier report could be built, with the reason.
  std::vector<std::string> skipped_cells;
};

// Writes results.tsv, tier reports per (direction, size, testset) over
// repetition-averaged scores, the per-source-NMO maximum trace and the
// averaged summary into `out_dir`. Throws when no record completed.
ReportBundle emit_report(const std::vector<RunRecord>& records, const fs::path& out_dir,
                         const sweep::TierOptions& tier_options = {});

}  // namespace asymbpe::orchestrator

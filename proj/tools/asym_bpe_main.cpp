#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "asymbpe/bpe.hpp"
#include "asymbpe/chrf.hpp"
#include "asymbpe/error.hpp"
#include "asymbpe/orchestrator.hpp"
#include "asymbpe/sampler.hpp"
#include "asymbpe/sweep.hpp"
#include "asymbpe/text_io.hpp"

namespace fs = std::filesystem;
using namespace asymbpe;

namespace {

std::vector<std::string> read_input(const std::string& path) {
  if (path.empty() || path == "-") return io::read_lines(std::cin);
  return io::read_lines(fs::path(path));
}

void write_output(const std::string& path, const std::vector<std::string>& lines) {
  if (path.empty() || path == "-") {
    io::write_lines(std::cout, lines);
  } else {
    io::write_lines(fs::path(path), lines);
  }
}

std::vector<std::size_t> parse_bins(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) throw Error("--bins: empty bound");
    std::size_t used = 0;
    unsigned long long v = std::stoull(item, &used);
    if (used != item.size()) throw Error("--bins: invalid bound '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

void print_reports(const std::vector<orchestrator::RunRecord>& records, const std::string& direction,
                   std::optional<std::size_t> size, const std::string& testset) {
  std::vector<orchestrator::RunRecord> selected;
  for (const auto& r : records) {
    if (!direction.empty() && r.direction != direction) continue;
    if (size && r.size != *size) continue;
    if (!testset.empty() && r.testset != testset) continue;
    selected.push_back(r);
  }
  if (selected.empty()) throw Error("report: no records match the selection");
  const fs::path tmp = fs::temp_directory_path() / ("asym-bpe-report-" + std::to_string(::getpid()));
  const auto bundle = orchestrator::emit_report(selected, tmp);
  bool first = true;
  for (const auto& t : bundle.tiers) {
    if (!first) std::cout << '\n';
    first = false;
    std::cout << sweep::format_tier_tsv(t) << '\n' << sweep::format_tier_text(t);
  }
  for (const auto& s : bundle.skipped_cells) std::cerr << "no tier report for " << s << '\n';
  fs::remove_all(tmp);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymmetric BPE segmentation and sweep toolkit"};
  app.require_subcommand(1);

  // learn-bpe
  auto* learn = app.add_subcommand("learn-bpe", "Learn a merge table from a text file");
  std::string learn_input, learn_output;
  std::size_t learn_nmo = 0;
  learn->add_option("--input", learn_input, "Training text, one sentence per line")->required();
  learn->add_option("--nmo", learn_nmo, "Number of merge operations")->required();
  learn->add_option("--output", learn_output, "Merge table path")->required();

  // apply-bpe
  auto* apply = app.add_subcommand("apply-bpe", "Segment text with a merge table");
  std::string apply_table, apply_input, apply_output;
  apply->add_option("--table", apply_table, "Merge table path")->required();
  apply->add_option("--input", apply_input, "Input text (default stdin)");
  apply->add_option("--output", apply_output, "Output text (default stdout)");

  // unbpe
  auto* unbpe = app.add_subcommand("unbpe", "Remove '@@ ' junctions (stdin to stdout)");
  std::string unbpe_input, unbpe_output;
  unbpe->add_option("--input", unbpe_input, "Input text (default stdin)");
  unbpe->add_option("--output", unbpe_output, "Output text (default stdout)");

  // sample
  auto* sample = app.add_subcommand("sample", "Length-stratified sample of a parallel corpus");
  std::string sample_src, sample_tgt, sample_bins = "10,15,20,25,30,35,40", sample_prefix;
  std::size_t sample_size = 0, sample_granularity = sampling::kDefaultGranularity;
  std::uint64_t sample_seed = 0;
  sample->add_option("--src", sample_src, "Source side")->required();
  sample->add_option("--tgt", sample_tgt, "Target side")->required();
  sample->add_option("--size", sample_size, "Target sample size")->required();
  sample->add_option("--seed", sample_seed, "Random seed")->required();
  sample->add_option("--bins", sample_bins, "Comma-separated bin upper bounds");
  sample->add_option("--granularity", sample_granularity, "Quota rounding granularity");
  sample->add_option("--out-prefix", sample_prefix, "Output prefix")->required();

  // chrf
  auto* chrf_cmd = app.add_subcommand("chrf", "Corpus CHRF++");
  std::string chrf_hyp, chrf_ref;
  chrf::ChrfParams chrf_params;
  chrf_cmd->add_option("--hyp", chrf_hyp, "Hypothesis file")->required();
  chrf_cmd->add_option("--ref", chrf_ref, "Reference file")->required();
  chrf_cmd->add_option("--char-order", chrf_params.char_order, "Character n-gram order")->check(CLI::NonNegativeNumber);
  chrf_cmd->add_option("--word-order", chrf_params.word_order, "Word n-gram order")->check(CLI::NonNegativeNumber);
  chrf_cmd->add_option("--beta", chrf_params.beta, "Recall weight")->check(CLI::PositiveNumber);

  // significance
  auto* sig = app.add_subcommand("significance", "Paired significance test between two systems");
  std::string sig_a, sig_b, sig_ref;
  std::size_t sig_iterations = 10000;
  std::uint64_t sig_seed = 0;
  sig->add_option("--hyp-a", sig_a, "System A hypotheses")->required();
  sig->add_option("--hyp-b", sig_b, "System B hypotheses")->required();
  sig->add_option("--ref", sig_ref, "References")->required();
  sig->add_option("--iterations", sig_iterations, "Randomization iterations")->check(CLI::PositiveNumber);
  sig->add_option("--seed", sig_seed, "Random seed");

  // report
  auto* report = app.add_subcommand("report", "Tier reports from sweep results");
  std::string report_results, report_run_dir, report_direction, report_testset;
  std::optional<std::size_t> report_size;
  auto* results_opt = report->add_option("--results", report_results, "results.tsv");
  auto* run_dir_opt = report->add_option("--run-dir", report_run_dir, "Sweep output directory");
  results_opt->excludes(run_dir_opt);
  report->add_option("--direction", report_direction, "Direction, e.g. en-hi");
  report->add_option("--size", report_size, "Dataset size");
  report->add_option("--testset", report_testset, "Test set name");

  // recommend
  auto* rec = app.add_subcommand("recommend", "NMO ranges for a dataset size");
  std::size_t rec_size = 0;
  rec->add_option("--size", rec_size, "Number of training pairs")->required()->check(CLI::PositiveNumber);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a configuration sweep");
  std::string sweep_config;
  bool sweep_resume = false;
  std::optional<std::size_t> sweep_workers;
  sweep_cmd->add_option("--config", sweep_config, "Experiment config (JSON)")->required();
  sweep_cmd->add_flag("--resume", sweep_resume, "Skip runs already completed");
  sweep_cmd->add_option("--workers", sweep_workers, "Concurrent configurations")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*learn) {
      const auto table = bpe::learn_bpe(io::read_lines(fs::path(learn_input)), learn_nmo);
      bpe::save_merge_table(learn_output, table);
      std::cerr << "learned " << table.nmo() << " merges\n";
      if (table.nmo() < learn_nmo) std::cerr << "warning: corpus supports only " << table.nmo() << " merges\n";
    } else if (*apply) {
      const bpe::Segmenter segmenter(bpe::load_merge_table(apply_table));
      write_output(apply_output, bpe::apply_corpus(segmenter, read_input(apply_input)));
    } else if (*unbpe) {
      write_output(unbpe_output, bpe::unsegment_corpus(read_input(unbpe_input)));
    } else if (*sample) {
      const auto corpus = sampling::load_parallel_corpus(sample_src, sample_tgt);
      const auto bins = sampling::bins_from_upper_bounds(parse_bins(sample_bins));
      const auto histogram = sampling::bin_histogram(corpus, bins);
      const auto plan = sampling::make_sample_plan(histogram, sample_size, sample_seed, sample_granularity);
      const auto drawn = sampling::draw_sample(corpus, bins, plan);
      io::write_lines(fs::path(sample_prefix + ".src"), drawn.corpus.source);
      io::write_lines(fs::path(sample_prefix + ".tgt"), drawn.corpus.target);
      nlohmann::json manifest{{"bin_plan", sampling::to_json(histogram)},
                              {"sample_plan", sampling::to_json(plan, bins)},
                              {"seed", sample_seed},
                              {"sampled_pairs", drawn.line_indices.size()}};
      io::write_file_atomic(sample_prefix + ".json", manifest.dump(2) + "\n");
      std::cout << "sampled " << drawn.line_indices.size() << " of " << corpus.size() << " pairs\n";
    } else if (*chrf_cmd) {
      const auto hyp = io::read_lines(fs::path(chrf_hyp));
      const auto ref = io::read_lines(fs::path(chrf_ref));
      const auto score = chrf::corpus_chrf(hyp, ref, chrf_params);
      std::cout << "chrF++ (c" << chrf_params.char_order << " w" << chrf_params.word_order << " b"
                << chrf_params.beta << ") " << fixed(score.value, 2) << '\n';
    } else if (*sig) {
      const auto a = io::read_lines(fs::path(sig_a));
      const auto b = io::read_lines(fs::path(sig_b));
      const auto ref = io::read_lines(fs::path(sig_ref));
      const auto result = chrf::paired_significance(a, b, ref, sig_iterations, sig_seed);
      std::cout << "method: " << chrf::kSignificanceMethod << " (iterations " << result.iterations << ", seed "
                << result.seed << ")\n"
                << "chrF++ A " << fixed(result.score_a, 2) << "  B " << fixed(result.score_b, 2) << '\n'
                << "p-value " << fixed(result.p_value, 4) << '\n'
                << "better system " << chrf::to_string(result.better_system) << '\n';
    } else if (*report) {
      fs::path results = report_results;
      if (!report_run_dir.empty()) {
        results = fs::path(report_run_dir) / "results.tsv";
        const auto bundle = orchestrator::emit_report(orchestrator::read_results(results), report_run_dir);
        std::cout << "wrote " << bundle.tiers_tsv.string() << ", " << bundle.tiers_txt.string() << ", "
                  << bundle.max_trace_tsv.string() << ", " << bundle.summary_tsv.string() << "\n\n";
      }
      if (results.empty()) throw Error("report: pass --results or --run-dir");
      print_reports(orchestrator::read_results(results), report_direction, report_size, report_testset);
    } else if (*rec) {
      const auto r = sweep::recommend(rec_size);
      std::cout << "band " << sweep::to_string(r.band) << '\n'
                << "src " << sweep::format_nmo(r.src_range.lo) << "-" << sweep::format_nmo(r.src_range.hi) << '\n'
                << "tgt " << sweep::format_nmo(r.tgt_range.lo) << "-" << sweep::format_nmo(r.tgt_range.hi) << '\n'
                << r.rationale << '\n';
    } else if (*sweep_cmd) {
      const auto cfg = orchestrator::load_experiment(sweep_config);
      orchestrator::SweepOptions options;
      options.resume = sweep_resume;
      options.workers = sweep_workers;
      const auto records = orchestrator::run_sweep(cfg, options);
      std::size_t failed = 0;
      for (const auto& r : records) failed += r.status == orchestrator::RunStatus::failed;
      std::cout << records.size() << " runs, " << failed << " failed; results in "
                << (cfg.output_dir / "results.tsv").string() << '\n';
      try {
        const auto bundle = orchestrator::emit_report(records, cfg.output_dir);
        std::cout << bundle.tiers.size() << " tier report(s) in " << bundle.tiers_txt.string() << '\n';
      } catch (const Error& e) {
        std::cerr << "report: " << e.what() << '\n';
      }
      return failed == 0 ? 0 : 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

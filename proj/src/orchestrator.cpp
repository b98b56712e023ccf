#include "asymbpe/orchestrator.hpp"

#include <algorithm>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>

#include "asymbpe/bpe.hpp"
#include "asymbpe/error.hpp"
#include "asymbpe/rng.hpp"
#include "asymbpe/sampler.hpp"
#include "asymbpe/text_io.hpp"

namespace asymbpe::orchestrator {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw Error(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(where + ": unknown key '" + key + "'");
    }
  }
}

const json& require(const json& obj, const std::string& where, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(where + ": missing field '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const std::string& where, const std::string& key) {
  const json& v = require(obj, where, key);
  if (!v.is_string() || v.get<std::string>().empty()) throw Error(where + "." + key + ": expected a non-empty string");
  return v.get<std::string>();
}

std::uint64_t as_unsigned(const json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw Error(where + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::uint64_t optional_unsigned(const json& obj, const std::string& where, const std::string& key,
                                std::uint64_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  return as_unsigned(*it, where + "." + key);
}

fs::path existing_path(const json& obj, const std::string& where, const std::string& key, const fs::path& base) {
  fs::path p = require_string(obj, where, key);
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) throw Error(where + "." + key + ": path does not exist: " + p.string());
  return p;
}

SplitPaths parse_split(const json& obj, const std::string& where, const fs::path& base) {
  check_keys(obj, where, {"src", "tgt"});
  return SplitPaths{existing_path(obj, where, "src", base), existing_path(obj, where, "tgt", base)};
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::size_t ExperimentConfig::planned_runs() const {
  std::size_t tests = 0;
  for (const auto& d : directions) tests += d.tests.size();
  return tests * sizes.size() * nmo_set.size() * nmo_set.size() * repetitions;
}

ExperimentConfig parse_experiment(const json& doc, const fs::path& base_dir) {
  check_keys(doc, "config",
             {"schema", "directions", "sizes", "nmo_set", "backend", "output_dir", "seed", "repetitions", "workers",
              "iterations", "sampling", "chrf"});
  const json& schema = require(doc, "config", "schema");
  if (!schema.is_number_integer() || schema.get<int>() != kSchemaVersion) {
    throw Error("config.schema: expected " + std::to_string(kSchemaVersion));
  }

  ExperimentConfig cfg;
  const json& dirs = require(doc, "config", "directions");
  if (!dirs.is_array() || dirs.empty()) throw Error("config.directions: expected a non-empty array");
  std::set<std::string> direction_labels;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const std::string where = "config.directions[" + std::to_string(i) + "]";
    const json& d = dirs[i];
    check_keys(d, where, {"source", "target", "train", "valid", "test"});
    DirectionSpec spec;
    spec.source_lang = require_string(d, where, "source");
    spec.target_lang = require_string(d, where, "target");
    spec.train = parse_split(require(d, where, "train"), where + ".train", base_dir);
    spec.valid = parse_split(require(d, where, "valid"), where + ".valid", base_dir);
    const json& tests = require(d, where, "test");
    if (!tests.is_array() || tests.empty()) throw Error(where + ".test: expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t k = 0; k < tests.size(); ++k) {
      const std::string twhere = where + ".test[" + std::to_string(k) + "]";
      check_keys(tests[k], twhere, {"name", "src", "tgt"});
      TestSet t;
      t.name = require_string(tests[k], twhere, "name");
      if (t.name.find_first_of("\t\n/ ") != std::string::npos) throw Error(twhere + ".name: must not contain tabs, spaces or '/'");
      if (!names.insert(t.name).second) throw Error(twhere + ".name: duplicate test set '" + t.name + "'");
      t.paths = SplitPaths{existing_path(tests[k], twhere, "src", base_dir), existing_path(tests[k], twhere, "tgt", base_dir)};
      spec.tests.push_back(std::move(t));
    }
    if (!direction_labels.insert(spec.label()).second) throw Error(where + ": duplicate direction " + spec.label());
    cfg.directions.push_back(std::move(spec));
  }

  const json& sizes = require(doc, "config", "sizes");
  if (!sizes.is_array() || sizes.empty()) throw Error("config.sizes: expected a non-empty array");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    auto v = as_unsigned(sizes[i], "config.sizes[" + std::to_string(i) + "]");
    if (v == 0) throw Error("config.sizes[" + std::to_string(i) + "]: must be positive");
    cfg.sizes.push_back(v);
  }

  const json& nmos = require(doc, "config", "nmo_set");
  if (!nmos.is_array() || nmos.empty()) throw Error("config.nmo_set: expected a non-empty array");
  for (std::size_t i = 0; i < nmos.size(); ++i) {
    const std::string where = "config.nmo_set[" + std::to_string(i) + "]";
    if (nmos[i].is_string()) {
      cfg.nmo_set.push_back(sweep::parse_nmo(nmos[i].get<std::string>()));
    } else {
      cfg.nmo_set.push_back(as_unsigned(nmos[i], where));
    }
  }
  (void)sweep::enumerate_grid(cfg.nmo_set);  // rejects duplicates and zero

  const json& backend = require(doc, "config", "backend");
  check_keys(backend, "config.backend", {"type", "command", "timeout_seconds"});
  const std::string type = require_string(backend, "config.backend", "type");
  if (type == "echo-reference") {
    cfg.backend.kind = BackendKind::echo_reference;
  } else if (type == "identity-copy") {
    cfg.backend.kind = BackendKind::identity_copy;
  } else if (type == "command") {
    cfg.backend.kind = BackendKind::command;
    cfg.backend.command = BackendCommand(
        require_string(backend, "config.backend", "command"),
        std::chrono::seconds(optional_unsigned(backend, "config.backend", "timeout_seconds", 0)));
  } else {
    throw Error("config.backend.type: expected 'command', 'echo-reference' or 'identity-copy'");
  }

  fs::path out = require_string(doc, "config", "output_dir");
  cfg.output_dir = out.is_relative() ? base_dir / out : out;
  cfg.seed = optional_unsigned(doc, "config", "seed", 1);
  cfg.repetitions = optional_unsigned(doc, "config", "repetitions", 1);
  if (cfg.repetitions < 1) throw Error("config.repetitions: must be at least 1");
  cfg.workers = optional_unsigned(doc, "config", "workers", 1);
  if (cfg.workers < 1) throw Error("config.workers: must be at least 1");
  cfg.iterations = optional_unsigned(doc, "config", "iterations", 10000);
  if (cfg.iterations < 1) throw Error("config.iterations: must be at least 1");

  cfg.bin_upper_bounds = sampling::kDefaultUpperBounds;
  if (auto it = doc.find("sampling"); it != doc.end()) {
    check_keys(*it, "config.sampling", {"bins", "granularity"});
    if (auto b = it->find("bins"); b != it->end()) {
      if (!b->is_array()) throw Error("config.sampling.bins: expected an array");
      cfg.bin_upper_bounds.clear();
      for (std::size_t i = 0; i < b->size(); ++i) {
        cfg.bin_upper_bounds.push_back(as_unsigned((*b)[i], "config.sampling.bins[" + std::to_string(i) + "]"));
      }
    }
    cfg.granularity = optional_unsigned(*it, "config.sampling", "granularity", 10);
    if (cfg.granularity < 1) throw Error("config.sampling.granularity: must be at least 1");
  }
  (void)sampling::bins_from_upper_bounds(cfg.bin_upper_bounds);

  if (auto it = doc.find("chrf"); it != doc.end()) {
    check_keys(*it, "config.chrf", {"char_order", "word_order", "beta"});
    cfg.chrf.char_order = static_cast<int>(optional_unsigned(*it, "config.chrf", "char_order", 6));
    cfg.chrf.word_order = static_cast<int>(optional_unsigned(*it, "config.chrf", "word_order", 2));
    if (auto b = it->find("beta"); b != it->end()) {
      if (!b->is_number() || b->get<double>() <= 0) throw Error("config.chrf.beta: expected a positive number");
      cfg.chrf.beta = b->get<double>();
    }
    if (cfg.chrf.orders() == 0) throw Error("config.chrf: at least one n-gram order is required");
  }
  return cfg;
}

ExperimentConfig load_experiment(const fs::path& path) {
  if (!fs::exists(path)) throw Error("config file does not exist: " + path.string());
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw Error("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment(doc, path.parent_path());
}

namespace {

struct Side {
  std::string role;  // "src" or "tgt"
  std::string lang;
};

// Segmented copies of every split for one side at one NMO.
struct SegmentedSide {
  fs::path table, train, valid;
  std::map<std::string, fs::path> tests;
};

class ResultsLog {
 public:
  ResultsLog(fs::path path, bool resume) : path_(std::move(path)) {
    fs::create_directories(path_.parent_path());
    if (resume && fs::exists(path_)) {
      previous_ = read_results(path_, true);
    } else {
      std::ofstream out(path_, std::ios::trunc);
      out << kResultsHeader << '\n';
    }
  }

  const std::vector<RunRecord>& previous() const { return previous_; }

  void append(const RunRecord& r) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("cannot append to " + path_.string());
    out << to_tsv_row(r) << '\n';
    out.flush();
  }

 private:
  fs::path path_;
  std::vector<RunRecord> previous_;
  std::mutex mutex_;
};

json record_manifest(const RunRecord& r) {
  json j;
  j["config"] = r.config.label();
  j["src_nmo"] = r.config.src_nmo;
  j["tgt_nmo"] = r.config.tgt_nmo;
  j["direction"] = r.direction;
  j["size"] = r.size;
  j["rep"] = r.rep;
  j["testset"] = r.testset;
  j["seed"] = r.seed;
  j["status"] = r.status == RunStatus::ok ? "ok" : "failed";
  j["failure_reason"] = r.failure_reason;
  j["backend_exit_status"] = r.exit_status;
  j["started_at"] = r.started_at;
  j["finished_at"] = r.finished_at;
  j["chrf"] = r.chrf ? json(*r.chrf) : json(nullptr);
  j["p_vs_baseline"] = r.p_vs_baseline ? json(*r.p_vs_baseline) : json(nullptr);
  j["significance_method"] = std::string(chrf::kSignificanceMethod);
  j["artifacts"] = {{"src_table", r.src_table.string()},
                    {"tgt_table", r.tgt_table.string()},
                    {"hypothesis", r.hypothesis.string()}};
  return j;
}

// Hypotheses may end a line with a stray continuation marker; it is dropped
// rather than failing the whole system.
std::string desegment_lenient(const std::string& line) {
  std::string_view v = line;
  while (v.ends_with(' ')) v.remove_suffix(1);
  while (v.ends_with(bpe::kContinuation)) {
    v.remove_suffix(bpe::kContinuation.size());
    while (v.ends_with(' ')) v.remove_suffix(1);
  }
  return bpe::unsegment(v);
}

struct Job {
  sweep::BpeConfig config;
  RunRecord record;
  std::vector<chrf::NGramStats> stats;
};

struct Cell {
  const DirectionSpec* direction;
  std::size_t size;
  std::size_t rep;
  std::uint64_t seed;
  fs::path dir;
};

fs::path system_dir(const Cell& cell, const sweep::BpeConfig& c) { return cell.dir / "systems" / c.label(); }
fs::path hyp_path(const Cell& cell, const sweep::BpeConfig& c, const std::string& test) {
  return system_dir(cell, c) / ("hyp." + test + ".txt");
}

}  // namespace

std::vector<RunRecord> run_sweep(const ExperimentConfig& cfg, const SweepOptions& options) {
  const auto grid = sweep::enumerate_grid(cfg.nmo_set);
  const std::size_t max_nmo = *std::max_element(cfg.nmo_set.begin(), cfg.nmo_set.end());
  const std::size_t workers = std::max<std::size_t>(1, options.workers.value_or(cfg.workers));
  std::shared_ptr<Backend> backend = options.backend ? options.backend : std::shared_ptr<Backend>(make_backend(cfg.backend));

  fs::create_directories(cfg.output_dir);
  {
    json manifest;
    manifest["schema"] = kSchemaVersion;
    manifest["seed"] = cfg.seed;
    manifest["repetitions"] = cfg.repetitions;
    manifest["iterations"] = cfg.iterations;
    manifest["planned_runs"] = cfg.planned_runs();
    manifest["nmo_set"] = cfg.nmo_set;
    manifest["sizes"] = cfg.sizes;
    manifest["significance_method"] = std::string(chrf::kSignificanceMethod);
    manifest["assumptions"] = {
        "validation data is segmented with the same per-configuration tables as training data",
        "repetition averages are means of per-repetition corpus scores, not scores of pooled corpora",
        "repetition r uses seed + r for sampling; significance uses substreams derived from it"};
    io::write_file_atomic(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
  }

  ResultsLog log(cfg.output_dir / "results.tsv", options.resume);
  std::map<std::string, RunRecord> completed;
  for (const auto& r : log.previous()) {
    if (r.status == RunStatus::ok) completed.emplace(r.key(), r);
  }

  std::vector<RunRecord> all_records;
  const auto bins = sampling::bins_from_upper_bounds(cfg.bin_upper_bounds);

  for (const auto& direction : cfg.directions) {
    const auto train = sampling::load_parallel_corpus(direction.train.src, direction.train.tgt);
    const auto valid = sampling::load_parallel_corpus(direction.valid.src, direction.valid.tgt);
    std::map<std::string, sampling::ParallelCorpus> tests;
    for (const auto& t : direction.tests) tests.emplace(t.name, sampling::load_parallel_corpus(t.paths.src, t.paths.tgt));
    const auto histogram = sampling::bin_histogram(train, bins);
    const Side sides[2] = {{"src", direction.source_lang}, {"tgt", direction.target_lang}};

    for (std::size_t size : cfg.sizes) {
      if (size > train.size()) {
        throw Error("size " + std::to_string(size) + " exceeds the " + std::to_string(train.size()) +
                    " training pairs of " + direction.label());
      }
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        Cell cell{&direction, size, rep, cfg.seed + rep,
                  cfg.output_dir / direction.label() / ("size-" + std::to_string(size)) / ("rep-" + std::to_string(rep))};

        // Sample.
        const auto plan = sampling::make_sample_plan(histogram, size, cell.seed, cfg.granularity);
        const auto sample = sampling::draw_sample(train, bins, plan);
        io::write_lines(cell.dir / "data" / ("train." + direction.source_lang), sample.corpus.source);
        io::write_lines(cell.dir / "data" / ("train." + direction.target_lang), sample.corpus.target);
        {
          json m{{"bin_plan", sampling::to_json(histogram)},
                 {"sample_plan", sampling::to_json(plan, bins)},
                 {"seed", cell.seed},
                 {"sampled_pairs", sample.line_indices.size()}};
          io::write_file_atomic(cell.dir / "data" / "sample.json", m.dump(2) + "\n");
        }

        // One table per (side, nmo), cut from a single max-NMO run: prefixes
        // of a learned table are the tables learned with fewer merges.
        std::map<std::pair<std::string, std::size_t>, SegmentedSide> segmented;
        for (const Side& side : sides) {
          const auto& train_side = side.role == "src" ? sample.corpus.source : sample.corpus.target;
          const auto& valid_side = side.role == "src" ? valid.source : valid.target;
          const auto full = bpe::learn_bpe(train_side, max_nmo);
          for (std::size_t nmo : cfg.nmo_set) {
            SegmentedSide seg;
            const std::string stem = side.role + "." + side.lang + "." + std::to_string(nmo);
            seg.table = cell.dir / "tables" / (stem + ".bpe");
            const auto table = full.prefix(nmo);
            bpe::save_merge_table(seg.table, table);
            const bpe::Segmenter segmenter(table);
            seg.train = cell.dir / "segmented" / (stem + ".train");
            seg.valid = cell.dir / "segmented" / (stem + ".valid");
            io::write_lines(seg.train, bpe::apply_corpus(segmenter, train_side));
            io::write_lines(seg.valid, bpe::apply_corpus(segmenter, valid_side));
            for (const auto& [name, corpus] : tests) {
              const auto& test_side = side.role == "src" ? corpus.source : corpus.target;
              seg.tests[name] = cell.dir / "segmented" / (stem + ".test." + name);
              io::write_lines(seg.tests[name], bpe::apply_corpus(segmenter, test_side));
            }
            segmented.emplace(std::pair{side.role, nmo}, std::move(seg));
          }
        }

        for (const auto& test : direction.tests) {
          const auto& references = tests.at(test.name).target;
          std::vector<Job> jobs;
          std::vector<const RunRecord*> carried;
          for (const auto& config : grid) {
            RunRecord probe;
            probe.config = config;
            probe.direction = direction.label();
            probe.size = size;
            probe.rep = rep;
            probe.testset = test.name;
            if (auto it = completed.find(probe.key()); it != completed.end()) {
              carried.push_back(&it->second);
              continue;
            }
            probe.seed = cell.seed;
            probe.src_table = segmented.at({"src", config.src_nmo}).table;
            probe.tgt_table = segmented.at({"tgt", config.tgt_nmo}).table;
            probe.hypothesis = hyp_path(cell, config, test.name);
            jobs.push_back(Job{config, std::move(probe), {}});
          }

          const auto n_jobs = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(workers))
          for (std::ptrdiff_t j = 0; j < n_jobs; ++j) {
            Job& job = jobs[j];
            RunRecord& rec = job.record;
            rec.started_at = timestamp_now();
            const auto& src = segmented.at({"src", job.config.src_nmo});
            const auto& tgt = segmented.at({"tgt", job.config.tgt_nmo});
            BackendJob bj{job.config, src.train, tgt.train, src.valid, tgt.valid, src.tests.at(test.name),
                          tgt.tests.at(test.name), test.paths.tgt, system_dir(cell, job.config) / "model",
                          rec.hypothesis};
            const fs::path done_marker = fs::path(rec.hypothesis.string() + ".done");
            try {
              bool have_hyp = options.resume && fs::exists(done_marker) && fs::exists(rec.hypothesis);
              if (!have_hyp) {
                std::error_code ec;
                fs::remove(done_marker, ec);
                fs::remove(rec.hypothesis, ec);
                fs::create_directories(rec.hypothesis.parent_path());
                const BackendOutcome outcome = backend->run(bj);
                rec.exit_status = outcome.exit_status;
                if (outcome.exit_status != 0) {
                  throw Error("backend failed: " + (outcome.message.empty() ? std::string("non-zero exit") : outcome.message));
                }
              }
              if (!fs::exists(rec.hypothesis)) throw Error("backend produced no hypothesis file");
              const auto hyps = io::read_lines(rec.hypothesis);
              if (hyps.size() != references.size()) {
                throw Error("hypothesis has " + std::to_string(hyps.size()) + " lines but the test set has " +
                            std::to_string(references.size()));
              }
              std::vector<std::string> plain;
              plain.reserve(hyps.size());
              for (const auto& h : hyps) plain.push_back(desegment_lenient(h));
              job.stats = chrf::corpus_stats_serial(plain, references, cfg.chrf);
              rec.chrf = chrf::corpus_chrf(job.stats, cfg.chrf.beta).value;
              rec.status = RunStatus::ok;
              if (!have_hyp) io::write_file_atomic(done_marker, rec.started_at + "\n");
            } catch (const std::exception& e) {
              rec.status = RunStatus::failed;
              rec.failure_reason = e.what();
              rec.chrf.reset();
            }
            rec.finished_at = timestamp_now();
          }

          // Baseline: best symmetric configuration of the cell, old or new.
          // Ranked at the precision stored in results.tsv so a resumed sweep
          // picks the same system as an uninterrupted one.
          struct Candidate {
            sweep::BpeConfig config;
            double score;
          };
          std::optional<Candidate> baseline;
          auto consider = [&](const sweep::BpeConfig& c, double s) {
            if (!c.symmetric()) return;
            s = sweep::round2(s);
            if (!baseline || s > baseline->score || (s == baseline->score && c < baseline->config)) baseline = Candidate{c, s};
          };
          for (const auto* r : carried) consider(r->config, *r->chrf);
          for (const auto& job : jobs) {
            if (job.record.status == RunStatus::ok) consider(job.config, *job.record.chrf);
          }

          std::vector<chrf::NGramStats> baseline_stats;
          if (baseline) {
            auto it = std::find_if(jobs.begin(), jobs.end(), [&](const Job& j) {
              return j.config == baseline->config && j.record.status == RunStatus::ok;
            });
            if (it != jobs.end()) {
              baseline_stats = it->stats;
            } else {
              std::vector<std::string> plain;
              for (const auto& h : io::read_lines(hyp_path(cell, baseline->config, test.name))) {
                plain.push_back(desegment_lenient(h));
              }
              baseline_stats = chrf::corpus_stats(plain, references, cfg.chrf);
            }
          }

          for (auto& job : jobs) {
            RunRecord& rec = job.record;
            if (rec.status == RunStatus::ok && baseline && !(job.config == baseline->config) && !references.empty()) {
              const std::uint64_t sig_seed = derive_seed(cell.seed, fnv1a(job.config.label() + "/" + test.name));
              rec.p_vs_baseline =
                  chrf::paired_significance(job.stats, baseline_stats, cfg.iterations, sig_seed, cfg.chrf.beta).p_value;
            }
            log.append(rec);
            io::write_file_atomic(cell.dir / "runs" / (job.config.label() + "." + test.name + ".json"),
                                  record_manifest(rec).dump(2) + "\n");
          }

          for (const auto* r : carried) all_records.push_back(*r);
          for (auto& job : jobs) all_records.push_back(std::move(job.record));
        }
      }
    }
  }
  return all_records;
}

}  // namespace asymbpe::orchestrator

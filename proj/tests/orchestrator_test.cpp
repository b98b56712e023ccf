#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <map>
#include <unistd.h>
#include <set>

#include "asymbpe/bpe.hpp"
#include "asymbpe/error.hpp"
#include "asymbpe/orchestrator.hpp"
#include "asymbpe/text_io.hpp"
#include "support/corpora.hpp"

using namespace asymbpe;
using namespace asymbpe::orchestrator;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("asymbpe-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json minimal_config(const fs::path& dir) {
  for (const char* f : {"tr.s", "tr.t", "va.s", "va.t", "te.s", "te.t"}) std::ofstream(dir / f) << "a b\n";
  return json{{"schema", 1},
              {"directions",
               {{{"source", "en"},
                 {"target", "hi"},
                 {"train", {{"src", "tr.s"}, {"tgt", "tr.t"}}},
                 {"valid", {{"src", "va.s"}, {"tgt", "va.t"}}},
                 {"test", {{{"name", "flores"}, {"src", "te.s"}, {"tgt", "te.t"}}}}}}},
              {"sizes", {1}},
              {"nmo_set", {500, "1K"}},
              {"backend", {{"type", "echo-reference"}}},
              {"output_dir", "out"}};
}

std::string error_of(const json& doc, const fs::path& dir) {
  try {
    parse_experiment(doc, dir);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ExperimentConfig, MinimalDefaults) {
  const auto dir = scratch("minimal");
  const auto cfg = parse_experiment(minimal_config(dir), dir);
  EXPECT_EQ(cfg.nmo_set, (std::vector<std::size_t>{500, 1000}));
  EXPECT_EQ(cfg.iterations, 10000u);
  EXPECT_EQ(cfg.workers, 1u);
  EXPECT_EQ(cfg.repetitions, 1u);
  EXPECT_EQ(cfg.planned_runs(), 4u);
  EXPECT_EQ(cfg.output_dir, dir / "out");
  EXPECT_EQ(cfg.directions[0].train.src, dir / "tr.s");
}

TEST(ExperimentConfig, FullScalePlan) {
  const auto dir = scratch("full");
  auto doc = minimal_config(dir);
  auto second = doc["directions"][0];
  second["source"] = "hi";
  second["target"] = "en";
  doc["directions"].push_back(second);
  doc["sizes"] = {50000, 100000, 500000, 1000000, 4000000, 8000000};
  doc["nmo_set"] = {"0.5K", "1K", "2K", "4K", "8K", "16K", "25K", "32K"};
  auto cfg = parse_experiment(doc, dir);
  EXPECT_EQ(cfg.planned_runs(), 768u);
  doc["repetitions"] = 3;
  EXPECT_EQ(parse_experiment(doc, dir).planned_runs(), 3u * 768u);
}

TEST(ExperimentConfig, ErrorsNameTheField) {
  const auto dir = scratch("errors");
  auto doc = minimal_config(dir);
  doc["colour"] = 1;
  EXPECT_NE(error_of(doc, dir).find("colour"), std::string::npos);

  doc = minimal_config(dir);
  doc.erase("sizes");
  EXPECT_NE(error_of(doc, dir).find("sizes"), std::string::npos);

  doc = minimal_config(dir);
  doc["directions"][0]["valid"]["tgt"] = "missing.txt";
  const auto msg = error_of(doc, dir);
  EXPECT_NE(msg.find("valid.tgt"), std::string::npos);
  EXPECT_NE(msg.find("missing.txt"), std::string::npos);

  doc = minimal_config(dir);
  doc["nmo_set"] = {500, 500};
  EXPECT_FALSE(error_of(doc, dir).empty());

  doc = minimal_config(dir);
  doc["repetitions"] = 0;
  EXPECT_NE(error_of(doc, dir).find("repetitions"), std::string::npos);

  doc = minimal_config(dir);
  doc["schema"] = 2;
  EXPECT_NE(error_of(doc, dir).find("schema"), std::string::npos);

  doc = minimal_config(dir);
  doc["backend"] = {{"type", "command"}, {"command", "cp {test_src} {test_src}"}};
  EXPECT_NE(error_of(doc, dir).find("{test_src}"), std::string::npos);

  doc = minimal_config(dir);
  doc["backend"] = {{"type", "command"}, {"command", "true"}};
  EXPECT_NE(error_of(doc, dir).find("{hyp_out}"), std::string::npos);

  doc = minimal_config(dir);
  doc["backend"]["type"] = "gpu";
  EXPECT_NE(error_of(doc, dir).find("backend.type"), std::string::npos);

  EXPECT_THROW(load_experiment(dir / "nope.json"), Error);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_experiment(dir / "bad.json"), Error);
}

TEST(BackendCommand, RendersQuotedPaths) {
  BackendCommand cmd("train {train_src} {train_tgt} > {hyp_out} # ${HOME} {other}", std::chrono::seconds(0));
  const auto s = cmd.render({"/a b/x", "it's", "v1", "v2", "t", "m", "/out/h.txt"});
  EXPECT_EQ(s, "train '/a b/x' 'it'\\''s' > '/out/h.txt' # ${HOME} {other}");
  // A substituted value containing a placeholder is not expanded again.
  EXPECT_EQ(BackendCommand("{train_src} {hyp_out}", {}).render({"{hyp_out}", "", "", "", "", "", "h"}),
            "'{hyp_out}' 'h'");
}

TEST(ResultsTsv, RowRoundTrip) {
  RunRecord r;
  r.config = {16000, 500};
  r.direction = "en-hi";
  r.size = 100000;
  r.rep = 2;
  r.testset = "flores";
  r.chrf = 35.004;
  r.p_vs_baseline = 0.0021;
  r.status = RunStatus::ok;
  const auto row = to_tsv_row(r);
  EXPECT_EQ(row, "16K_500\t16000\t500\ten-hi\t100000\t2\tflores\t35.00\t0.0021\tok");
  const auto back = parse_tsv_row(row);
  EXPECT_EQ(back.key(), r.key());
  EXPECT_DOUBLE_EQ(*back.chrf, 35.0);
  RunRecord f = r;
  f.status = RunStatus::failed;
  f.chrf.reset();
  f.p_vs_baseline.reset();
  EXPECT_EQ(to_tsv_row(f), "16K_500\t16000\t500\ten-hi\t100000\t2\tflores\t-\t-\tfailed");
  EXPECT_THROW(parse_tsv_row("16K_500\t16000\t501\ten-hi\t1\t0\tx\t1\t-\tok"), Error);
  EXPECT_THROW(parse_tsv_row("a\tb"), Error);
  EXPECT_THROW(f.system_result(), Error);
  EXPECT_DOUBLE_EQ(r.system_result().score, 35.004);
}

TEST(Report, AveragesRepetitionsAndSkipsThinCells) {
  const auto dir = scratch("report");
  std::vector<RunRecord> recs;
  for (std::size_t rep = 0; rep < 3; ++rep) {
    RunRecord r;
    r.config = {500, 500};
    r.direction = "en-hi";
    r.size = 10;
    r.rep = rep;
    r.testset = "t";
    r.chrf = 10.0 * static_cast<double>(rep + 1);
    r.status = RunStatus::ok;
    recs.push_back(r);
  }
  const auto bundle = emit_report(recs, dir);
  EXPECT_TRUE(bundle.tiers.empty());
  ASSERT_EQ(bundle.skipped_cells.size(), 1u);
  const auto summary = io::read_lines(bundle.summary_tsv);
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[1], "en-hi\t10\tt\t500_500\t500\t500\t3\t20.00");
  EXPECT_EQ(io::read_lines(bundle.results_tsv).size(), 4u);

  std::vector<RunRecord> single(1, recs[0]);
  const auto one = emit_report(single, dir);
  EXPECT_EQ(io::read_lines(one.results_tsv).size(), 2u);
  EXPECT_TRUE(one.tiers.empty());

  for (auto& r : recs) {
    r.status = RunStatus::failed;
    r.chrf.reset();
  }
  EXPECT_THROW(emit_report(recs, dir), Error);
}

TEST(Sweep, EchoBackendScoresHundredEverywhere) {
  const auto toy = testdata::write_toy_experiment(scratch("echo"), 300, {30, 120}, "echo-reference");
  const auto cfg = load_experiment(toy.config);
  const auto records = run_sweep(cfg);
  ASSERT_EQ(records.size(), 4u);
  for (const auto& r : records) {
    ASSERT_EQ(r.status, RunStatus::ok) << r.failure_reason;
    EXPECT_NEAR(*r.chrf, 100.0, 1e-9);
  }
  const auto rows = read_results(cfg.output_dir / "results.tsv");
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) EXPECT_NE(to_tsv_row(r).find("\t100.00\t"), std::string::npos);
  EXPECT_TRUE(fs::exists(cfg.output_dir / "manifest.json"));
}

TEST(Sweep, IdentityBackendOnCopiedCorpus) {
  const auto toy = testdata::write_toy_experiment(scratch("identity"), 200, {20, 80}, "identity-copy");
  const auto records = run_sweep(load_experiment(toy.config));
  for (const auto& r : records) {
    ASSERT_EQ(r.status, RunStatus::ok) << r.failure_reason;
    EXPECT_NEAR(*r.chrf, 100.0, 1e-9);
  }
}

TEST(Sweep, TablesAreSharedPrefixesAndByteIdentical) {
  const auto toy = testdata::write_toy_experiment(scratch("tables"), 300, {40, 150}, "echo-reference");
  const auto cfg = load_experiment(toy.config);
  run_sweep(cfg);
  const fs::path tables = cfg.output_dir / "en-xx" / "size-300" / "rep-0" / "tables";
  const auto small = bpe::load_merge_table(tables / "src.en.40.bpe");
  const auto big = bpe::load_merge_table(tables / "src.en.150.bpe");
  EXPECT_EQ(small.rules, big.prefix(40).rules);
  // Learning the small table directly gives the same bytes.
  const auto train = io::read_lines(cfg.output_dir / "en-xx" / "size-300" / "rep-0" / "data" / "train.en");
  const fs::path direct = cfg.output_dir / "direct.bpe";
  bpe::save_merge_table(direct, bpe::learn_bpe(train, 40));
  EXPECT_EQ(io::read_file(direct), io::read_file(tables / "src.en.40.bpe"));
}

TEST(Sweep, ResumeKeepsScoresAndSkipsCompletedRuns) {
  const auto toy = testdata::write_toy_experiment(scratch("resume"), 300, {30, 120}, "echo-reference");
  const auto cfg = load_experiment(toy.config);
  auto planted = std::make_shared<testdata::PlantedQualityBackend>(
      [](const sweep::BpeConfig& c) { return c.src_nmo == 120 && c.tgt_nmo == 30 ? 0.9 : 0.5; });
  SweepOptions options;
  options.backend = planted;
  const auto first = run_sweep(cfg, options);
  const auto before = io::read_lines(cfg.output_dir / "results.tsv");

  // Simulate an interruption: drop the last two rows.
  auto truncated = before;
  truncated.resize(truncated.size() - 2);
  io::write_lines(cfg.output_dir / "results.tsv", truncated);

  struct Counting final : Backend {
    std::shared_ptr<Backend> inner;
    std::atomic<int> calls{0};
    BackendOutcome run(const BackendJob& j) override {
      ++calls;
      return inner->run(j);
    }
  };
  auto counting = std::make_shared<Counting>();
  counting->inner = planted;
  options.backend = counting;
  options.resume = true;
  const auto second = run_sweep(cfg, options);
  EXPECT_EQ(counting->calls.load(), 0);  // .done markers cover the two lost rows
  ASSERT_EQ(second.size(), first.size());
  std::map<std::string, std::string> a, b;
  for (const auto& r : first) a[r.key()] = to_tsv_row(r);
  for (const auto& r : second) b[r.key()] = to_tsv_row(r);
  EXPECT_EQ(a, b);
  const auto after = read_results(cfg.output_dir / "results.tsv");
  EXPECT_EQ(after.size(), 4u);
  std::set<std::string> rows_before(before.begin() + 1, before.end()), rows_after;
  for (const auto& r : after) rows_after.insert(to_tsv_row(r));
  EXPECT_EQ(rows_before, rows_after);

  // A fresh run ignores markers and recomputes.
  options.resume = false;
  counting->calls = 0;
  run_sweep(cfg, options);
  EXPECT_EQ(counting->calls.load(), 4);
}

TEST(Sweep, FailuresAreRecordedAndOthersContinue) {
  const auto toy = testdata::write_toy_experiment(scratch("fail"), 300, {30, 120}, "echo-reference");
  const auto cfg = load_experiment(toy.config);
  SweepOptions options;
  options.backend = std::make_shared<testdata::FlakyBackend>(
      std::make_shared<EchoReferenceBackend>(), [](const sweep::BpeConfig& c) {
        if (c == sweep::BpeConfig{30, 120}) return 1;
        if (c == sweep::BpeConfig{120, 30}) return 2;
        return 0;
      });
  const auto records = run_sweep(cfg, options);
  ASSERT_EQ(records.size(), 4u);
  std::size_t failed = 0;
  for (const auto& r : records) {
    if (r.status == RunStatus::failed) {
      ++failed;
      EXPECT_FALSE(r.chrf.has_value());
      EXPECT_FALSE(r.failure_reason.empty());
    } else {
      EXPECT_NEAR(*r.chrf, 100.0, 1e-9);
    }
  }
  EXPECT_EQ(failed, 2u);
  const auto rows = read_results(cfg.output_dir / "results.tsv");
  EXPECT_EQ(std::count_if(rows.begin(), rows.end(), [](const RunRecord& r) { return r.status == RunStatus::failed; }), 2);
}

TEST(Sweep, CommandBackendWithEnvironment) {
  const auto dir = scratch("command");
  const auto toy = testdata::write_toy_experiment(dir, 200, {20, 60}, "echo-reference");
  auto doc = json::parse(io::read_file(toy.config));
  doc["backend"] = {{"type", "command"},
                    {"command", "test -n \"$HOME\" && sed 's/@@ //g' {test_src} > {hyp_out} && mkdir -p {model_dir}"},
                    {"timeout_seconds", 30}};
  std::ofstream(toy.config) << doc.dump(2);
  const auto records = run_sweep(load_experiment(toy.config));
  for (const auto& r : records) {
    ASSERT_EQ(r.status, RunStatus::ok) << r.failure_reason;
    EXPECT_NEAR(*r.chrf, 100.0, 1e-9);
  }

  doc["backend"] = {{"type", "command"}, {"command", "exit 3 # {hyp_out}"}};
  std::ofstream(toy.config) << doc.dump(2);
  for (const auto& r : run_sweep(load_experiment(toy.config))) {
    EXPECT_EQ(r.status, RunStatus::failed);
    EXPECT_EQ(r.exit_status, 3);
  }

  doc["backend"] = {{"type", "command"}, {"command", "sleep 5; touch {hyp_out}"}, {"timeout_seconds", 1}};
  std::ofstream(toy.config) << doc.dump(2);
  auto cfg = load_experiment(toy.config);
  cfg.nmo_set = {20};
  const auto timed = run_sweep(cfg);
  ASSERT_EQ(timed.size(), 1u);
  EXPECT_EQ(timed[0].status, RunStatus::failed);
  EXPECT_NE(timed[0].failure_reason.find("timed out"), std::string::npos);
}

TEST(Sweep, PlantedBestConfigurationIsRecovered) {
  const auto toy = testdata::write_toy_experiment(scratch("planted"), 300, {30, 120}, "echo-reference");
  const auto cfg = load_experiment(toy.config);
  SweepOptions options;
  options.backend = std::make_shared<testdata::PlantedQualityBackend>([](const sweep::BpeConfig& c) {
    if (c == sweep::BpeConfig{120, 30}) return 0.95;
    if (c == sweep::BpeConfig{30, 120}) return 0.2;
    return c.src_nmo == 30 ? 0.5 : 0.7;
  });
  const auto records = run_sweep(cfg, options);
  const auto bundle = emit_report(records, cfg.output_dir);
  ASSERT_EQ(bundle.tiers.size(), 1u);
  const auto& t = bundle.tiers[0];
  EXPECT_EQ(t.high_a.result.config, (sweep::BpeConfig{120, 30}));
  EXPECT_EQ(t.low_a.result.config, (sweep::BpeConfig{30, 120}));
  EXPECT_EQ(t.baseline.result.config, (sweep::BpeConfig{120, 120}));
  ASSERT_TRUE(t.high_a.result.p_vs_baseline.has_value());
  EXPECT_LT(*t.high_a.result.p_vs_baseline, 0.05);
  EXPECT_FALSE(t.baseline.result.p_vs_baseline.has_value());
  EXPECT_TRUE(fs::exists(bundle.max_trace_tsv));
  EXPECT_EQ(io::read_lines(bundle.max_trace_tsv).size(), 3u);
}

TEST(Sweep, RepetitionsUseDistinctSeeds) {
  const auto toy = testdata::write_toy_experiment(scratch("reps"), 400, {30, 90}, "echo-reference", 2, 200);
  const auto cfg = load_experiment(toy.config);
  const auto records = run_sweep(cfg);
  ASSERT_EQ(records.size(), 8u);
  std::set<std::uint64_t> seeds;
  for (const auto& r : records) seeds.insert(r.seed);
  EXPECT_EQ(seeds, (std::set<std::uint64_t>{7, 8}));
  const auto s0 = io::read_lines(cfg.output_dir / "en-xx" / "size-200" / "rep-0" / "data" / "train.en");
  const auto s1 = io::read_lines(cfg.output_dir / "en-xx" / "size-200" / "rep-1" / "data" / "train.en");
  EXPECT_NE(s0, s1);
  const auto manifest = json::parse(io::read_file(cfg.output_dir / "en-xx" / "size-200" / "rep-1" / "runs" / "30_90.toy.json"));
  EXPECT_EQ(manifest["seed"], 8);
  EXPECT_EQ(manifest["status"], "ok");
}

namespace {

struct ScratchCleanup final : ::testing::Environment {
  void TearDown() override {
    std::error_code ec;
    fs::remove_all(fs::temp_directory_path() / ("asymbpe-test-" + std::to_string(::getpid())), ec);
  }
};

const auto* const kCleanup = ::testing::AddGlobalTestEnvironment(new ScratchCleanup);

}  // namespace

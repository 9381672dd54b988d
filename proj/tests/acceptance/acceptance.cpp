// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "generators.hpp"
#include "oracle.hpp"
#include "transfeat/cli.hpp"
#include "transfeat/engine.hpp"
#include "transfeat/featureio.hpp"
#include "transfeat/registry.hpp"
#include "transfeat/scorer.hpp"
#include "transfeat/synth.hpp"
#include "transfeat/workload.hpp"

namespace {

using namespace transfeat;

struct Outcome {
  bool pass = false;
  std::string detail;
};

const std::vector<std::string> kFields{"cls"};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Shared by the oracle-equivalence and window-mass criteria.
struct PropertyRuns {
  std::size_t streams = 0;
  std::size_t frames = 0;
  std::size_t oracle_mismatches = 0;
  std::size_t mass_violations = 0;
  std::string first_problem;
};

PropertyRuns run_property_streams() {
  PropertyRuns r;
  gen::Rng rng(20240917);
  for (int iter = 0; iter < 1000; ++iter) {
    auto stream = gen::random_stream(rng, {1000, 50, 26});
    const std::size_t k = rng.between(1, 20);
    EngineConfig config;
    config.window = rng.between(1, 64);
    config.flush_at_end = rng.chance(0.5);
    if (rng.chance(0.25)) config.idle_timeout = rng.between(1, 200);

    auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(stream.events, k, kFields));
    const auto frames = run_stream(stream.events, vocab, kFields, config);

    oracle::Options opt;
    opt.window = config.window;
    opt.k = k;
    opt.idle_timeout = config.idle_timeout;
    opt.flush = config.flush_at_end;
    const auto expected = oracle::frames(stream.events, opt);

    ++r.streams;
    r.frames += frames.size();
    if (frames != expected) {
      ++r.oracle_mismatches;
      if (r.first_problem.empty()) r.first_problem = "stream " + std::to_string(iter);
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
      std::uint64_t mass = 0;
      for (const auto& e : frames[i].entries) mass += e.count;
      if (mass != std::min<std::uint64_t>(config.window, i + 1)) ++r.mass_violations;
    }
  }
  return r;
}

Outcome oracle_equivalence(const PropertyRuns& r) {
  return {r.oracle_mismatches == 0,
          std::to_string(r.streams) + " streams, " + std::to_string(r.frames) + " frames, " +
              std::to_string(r.oracle_mismatches) + " mismatching streams" +
              (r.first_problem.empty() ? "" : " (first: " + r.first_problem + ")")};
}

Outcome window_mass(const PropertyRuns& r) {
  return {r.mass_violations == 0,
          std::to_string(r.mass_violations) + " violations over " + std::to_string(r.frames) +
              " frames"};
}

Outcome worked_example() {
  auto vocab = std::make_shared<const Vocabulary>(
      5, std::vector<std::string>{"p1", "p2", "p3", "p4", "p5"});
  std::vector<Event> events{gen::event("t1", 1, "p1"), gen::event("t2", 2, "p2"),
                            gen::event("t1", 3, "p3"), gen::event("t2", 4, "p4", true),
                            gen::event("t1", 5, "p5", true)};
  const auto frames = run_stream(events, vocab, kFields, {.window = 10});
  std::vector<std::pair<std::string, Transition>> within;
  std::size_t boundary = 0;
  for (const auto& f : frames) {
    if (f.transition.from == kSot || f.transition.to == kEot) {
      ++boundary;
    } else {
      within.emplace_back(f.case_id, f.transition);
    }
  }
  const auto p = [&](const char* l) { return vocab->map(l); };
  const std::vector<std::pair<std::string, Transition>> expected{
      {"t1", {p("p1"), p("p3")}}, {"t2", {p("p2"), p("p4")}}, {"t1", {p("p3"), p("p5")}}};
  // Every within-case pair must come from the case's own history.
  bool cross_case = false;
  for (const auto& [c, t] : within) {
    const bool t1 = t == Transition{p("p1"), p("p3")} || t == Transition{p("p3"), p("p5")};
    const bool t2 = t == Transition{p("p2"), p("p4")};
    if ((c == "t1" && !t1) || (c == "t2" && !t2)) cross_case = true;
  }
  const bool pass = within == expected && boundary == 4 && !cross_case;
  return {pass, std::to_string(within.size()) + " within-case transitions, " +
                    std::to_string(boundary) + " SOT/EOT frames"};
}

Outcome throughput() {
  BenchConfig config;  // 1e6 events, 1e4 open cases, k=50, l=200
  const auto report = run_bench(config);
  return {report.events_per_sec >= 80000.0,
          fmt("%.0f events/s", report.events_per_sec) + fmt(" (%.2f s)", report.elapsed_sec)};
}

Outcome complexity() {
  std::string detail;
  bool pass = true;
  for (bool emit : {true, false}) {
    double p50[2];
    const std::size_t cases[2] = {1000, 10000};
    for (int i = 0; i < 2; ++i) {
      BenchConfig config;
      config.n_events = 500'000;
      config.n_cases = cases[i];
      config.emit_entries = emit;
      // Median of three runs damps scheduler noise.
      std::vector<double> runs;
      for (int rep = 0; rep < 3; ++rep) runs.push_back(run_bench(config).p50_ns);
      std::sort(runs.begin(), runs.end());
      p50[i] = runs[1];
    }
    const double ratio = p50[1] / p50[0];
    pass = pass && ratio < 1.5;
    if (!detail.empty()) detail += "; ";
    detail += std::string(emit ? "matrices on" : "matrices off") + fmt(": p50 %.0f ns", p50[0]) +
              fmt(" -> %.0f ns", p50[1]) + fmt(" (x%.2f)", ratio);
  }
  return {pass, detail};
}

// Synthetic separation: the profile is trained on the frames emitted before
// the first case after the normal-only prefix, and AUC is taken over the
// remaining cases.
Outcome anomaly_separation() {
  SynthConfig synth;
  synth.n_cases = 2000;
  synth.anomaly_rate = 0.05;
  synth.normal_prefix = 200;
  synth.arrival_rate = 0.5;
  synth.seed = 1;
  const auto templates = default_templates();
  const SynthOutput data = generate(templates, synth);

  const auto fields = synth_schema().class_fields;
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(data.events, 25, fields));
  const std::size_t window = 200;
  const auto frames = run_stream(data.events, vocab, fields, {.window = window, .flush_at_end = true});

  const std::string first_test_case = "case-" + std::string(6 - std::to_string(synth.normal_prefix).size(), '0') +
                                      std::to_string(synth.normal_prefix);
  std::size_t warmup = 0;
  while (warmup < frames.size() && frames[warmup].case_id < first_test_case) ++warmup;

  ScorerConfig config{.dim = vocab->dim(), .window = window, .warmup = std::max<std::size_t>(warmup, 1)};
  const auto records = score_frames_parallel(frames, config);
  auto scores = case_scores(records);
  std::map<std::string, int> labels;
  int positives = 0;
  for (const auto& [c, y] : data.labels) {
    if (c < first_test_case) continue;
    labels[c] = y;
    positives += y;
  }
  const double auc = roc_auc(scores, labels);
  return {auc >= 0.90, fmt("AUC %.4f", auc) + " over " + std::to_string(labels.size()) +
                           " cases (" + std::to_string(positives) + " anomalous), warmup " +
                           std::to_string(warmup) + " frames"};
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(std::filesystem::temp_directory_path() /
              ("transfeat_accept_" + tag + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "transfeat");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

bool full_pipeline(const TempDir& d) {
  return cli({"synth", "--cases", "500", "--anomaly-rate", "0.05", "--seed", "11", "--events-out",
              d / "events.ndjson", "--labels-out", d / "labels.csv"}) == 0 &&
         cli({"vocab", "-i", d / "events.ndjson", "--class-fields", "class", "-k", "25", "-o",
              d / "vocab.json"}) == 0 &&
         cli({"generate", "-i", d / "events.ndjson", "--class-fields", "class", "--vocab",
              d / "vocab.json", "-l", "200", "--flush", "-o", d / "frames.ndjson"}) == 0 &&
         cli({"score", "--frames", d / "frames.ndjson", "--vocab", d / "vocab.json", "-l", "200",
              "--warmup", "500", "-o", d / "scores.ndjson"}) == 0 &&
         cli({"eval", "--scores", d / "scores.ndjson", "--labels", d / "labels.csv", "-o",
              d / "eval.json"}) == 0;
}

Outcome determinism() {
  TempDir a("a");
  TempDir b("b");
  if (!full_pipeline(a) || !full_pipeline(b)) return {false, "pipeline run failed"};
  std::size_t bytes = 0;
  for (const char* f : {"events.ndjson", "labels.csv", "vocab.json", "frames.ndjson",
                        "scores.ndjson", "eval.json"}) {
    const std::string x = slurp(a / f);
    if (x.empty() || x != slurp(b / f)) return {false, std::string(f) + " differs"};
    bytes += x.size();
  }
  return {true, "6 artifacts identical, " + std::to_string(bytes) + " bytes"};
}

Outcome round_trip() {
  gen::Rng rng(77);
  const std::uint32_t dim = 12;
  std::vector<FeatureFrame> frames;
  for (std::uint64_t i = 0; i < 10000; ++i) frames.push_back(gen::random_frame(rng, i, dim));

  std::vector<FeatureFrame> decoded[2];
  int n = 0;
  for (FrameFormat format : {FrameFormat::SparseNdjson, FrameFormat::DenseCsv}) {
    std::stringstream buf;
    write_frames(frames, buf, {.format = format, .dim = dim});
    decoded[n++] = read_frames(buf, {.format = format, .dim = dim});
  }
  const bool sparse_ok = decoded[0] == frames;
  const bool dense_ok = decoded[1] == frames;
  return {sparse_ok && dense_ok && decoded[0] == decoded[1],
          std::to_string(frames.size()) + " frames; sparse " + (sparse_ok ? "exact" : "differs") +
              ", dense " + (dense_ok ? "exact" : "differs")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                sec);
    std::fflush(stdout);
  };

  PropertyRuns runs;
  report(1, "oracle equivalence", [&] {
    runs = run_property_streams();
    return oracle_equivalence(runs);
  });
  report(2, "worked example", worked_example);
  report(3, "window mass", [&] { return window_mass(runs); });
  report(4, "throughput >= 80000 events/s", throughput);
  report(5, "median latency x10 cases < 1.5x", complexity);
  report(6, "anomaly separation AUC >= 0.90", anomaly_separation);
  report(7, "pipeline determinism", determinism);
  report(8, "frame round-trip", round_trip);
  return failures == 0 ? 0 : 1;
}

#include "transfeat/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "transfeat/csv.hpp"
#include "transfeat/engine.hpp"
#include "transfeat/error.hpp"
#include "transfeat/featureio.hpp"
#include "transfeat/handoff.hpp"
#include "transfeat/ingest.hpp"
#include "transfeat/registry.hpp"
#include "transfeat/scorer.hpp"
#include "transfeat/synth.hpp"
#include "transfeat/text.hpp"
#include "transfeat/workload.hpp"

namespace transfeat {

namespace {

struct InputOptions {
  std::vector<std::string> inputs;
  std::string format;  // empty: by extension
  std::string case_field = "case";
  std::string ts_field = "ts";
  bool no_ts = false;
  std::string end_field = "end";
  std::vector<std::string> class_fields;
  bool lenient = false;
  Timestamp reorder_horizon = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("-i,--input", inputs, "Event stream file(s); '-' for stdin")->required();
    cmd.add_option("--input-format", format, "ndjson or csv (default: from extension)");
    cmd.add_option("--case-field", case_field, "Field holding the case id")->capture_default_str();
    cmd.add_option("--ts-field", ts_field, "Field holding the timestamp")->capture_default_str();
    cmd.add_flag("--no-ts", no_ts, "Input has no timestamps; use record positions");
    cmd.add_option("--end-field", end_field, "Field marking the last event of a case")
        ->capture_default_str();
    cmd.add_option("--class-fields", class_fields, "Attributes forming the event class")
        ->required()
        ->delimiter(',');
    cmd.add_flag("--lenient", lenient, "Skip malformed records instead of failing");
    cmd.add_option("--reorder-horizon", reorder_horizon,
                   "Per-source reorder tolerance in timestamp units (0 = strict)")
        ->capture_default_str();
  }

  Schema schema() const {
    Schema s;
    s.case_field = case_field;
    s.timestamp_field = no_ts ? std::nullopt : std::optional<std::string>(ts_field);
    s.end_field = end_field.empty() ? std::nullopt : std::optional<std::string>(end_field);
    s.class_fields = class_fields;
    return s;
  }

  // Each source is parsed on its own thread and merged by timestamp.
  std::unique_ptr<EventReader> open(std::ostream& err) const {
    const Schema s = schema();
    ParseOptions parse;
    parse.strict = !lenient;
    parse.on_error = [&err](const ParseError& e) {
      err << "transfeat: warning: " << e.kind() << ": " << e.what() << "\n";
    };
    std::vector<StreamMerger::Input> lanes;
    for (const auto& path : inputs) {
      StreamSource src;
      src.source_id = path;
      src.path = path;
      src.format = format.empty() ? infer_input_format(path) : parse_input_format(format);
      lanes.push_back({path, make_threaded(open_reader(src, s, parse))});
    }
    MergeOptions merge;
    merge.reorder_horizon = reorder_horizon;
    merge.on_clamp = [&err](const std::string& source, std::size_t record) {
      err << "transfeat: warning: record " << record << " of '" << source
          << "' is later than the reorder horizon; timestamp clamped\n";
    };
    return std::make_unique<StreamMerger>(std::move(lanes), merge);
  }
};

// Output target: a file, or `fallback` for "-".
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw IoError("cannot write '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& stream() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw IoError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

// ---------------------------------------------------------------------------

int cmd_vocab(const InputOptions& in, std::size_t k, const std::string& out_path,
              std::ostream& err) {
  auto reader = in.open(err);
  std::vector<Event> events = read_all(*reader);
  Vocabulary vocab = build_vocabulary(events, k, in.class_fields);
  save_vocabulary(vocab, out_path);
  return 0;
}

struct GenerateOptions {
  std::string vocab_path;
  std::size_t window = 200;
  std::optional<Timestamp> idle_timeout;
  bool flush = false;
  std::string format = "sparse-ndjson";
  bool normalize = false;
  std::string output = "-";
};

int cmd_generate(const InputOptions& in, const GenerateOptions& opt, std::ostream& out,
                 std::ostream& err) {
  auto vocab = std::make_shared<const Vocabulary>(load_vocabulary(opt.vocab_path));
  EngineConfig config;
  config.window = opt.window;
  config.idle_timeout = opt.idle_timeout;
  config.flush_at_end = opt.flush;
  Engine engine(vocab, in.class_fields, config);

  FrameWriteOptions write;
  write.format = parse_frame_format(opt.format);
  write.dim = vocab->dim();
  write.normalize = opt.normalize;
  write.window = opt.window;

  Output target(opt.output, out);
  FrameWriter writer(target.stream(), write);
  auto reader = in.open(err);

  // Engine on this thread, writer on its own; batches keep frame order.
  Handoff<std::vector<FeatureFrame>> handoff(8);
  std::exception_ptr writer_error;
  std::thread writer_thread([&] {
    try {
      while (auto batch = handoff.pop()) {
        for (const auto& f : *batch) writer.write(f);
      }
    } catch (...) {
      writer_error = std::current_exception();
      handoff.cancel();
    }
  });

  std::vector<FeatureFrame> batch;
  bool writer_gone = false;
  auto flush_batch = [&] {
    if (batch.empty()) return;
    if (!handoff.push(std::move(batch))) writer_gone = true;
    batch.clear();
  };
  auto sink = [&](const FeatureFrame& f) {
    batch.push_back(f);
    if (batch.size() >= 512) flush_batch();
  };
  try {
    while (auto e = reader->next()) {
      engine.feed(*e, sink);
      if (writer_gone) break;
    }
    engine.finish(sink);
    flush_batch();
    handoff.close();
  } catch (...) {
    handoff.fail(std::current_exception());
    writer_thread.join();
    throw;
  }
  writer_thread.join();
  if (writer_error) std::rethrow_exception(writer_error);
  target.finish();
  return 0;
}

struct ScoreOptions {
  std::string frames;
  std::string format = "sparse-ndjson";
  bool frames_normalized = false;
  std::string vocab_path;
  std::size_t window = 200;
  std::size_t warmup = 100;
  bool update_after_warmup = false;
  std::string output = "-";
};

int cmd_score(const ScoreOptions& opt, std::ostream& out) {
  const Vocabulary vocab = load_vocabulary(opt.vocab_path);
  FrameReadOptions read;
  read.format = parse_frame_format(opt.format);
  read.dim = vocab.dim();
  if (opt.frames_normalized) read.normalized_window = opt.window;
  std::vector<FeatureFrame> frames;
  {
    std::ifstream in = open_in(opt.frames);
    frames = read_frames(in, read);
  }
  ScorerConfig config;
  config.dim = vocab.dim();
  config.window = opt.window;
  config.warmup = opt.warmup;
  config.update_after_warmup = opt.update_after_warmup;
  const auto records = score_frames_parallel(frames, config);

  Output target(opt.output, out);
  write_scores(target.stream(), records);
  target.finish();
  return 0;
}

struct EvalOptions {
  std::string scores;
  std::string labels;
  std::string case_scores_out;
  std::string output = "-";
};

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  std::vector<ScoreRecord> records;
  {
    std::ifstream in = open_in(opt.scores);
    records = read_scores(in);
  }
  std::map<std::string, int> labels;
  {
    std::ifstream in = open_in(opt.labels);
    labels = read_labels(in);
  }
  const auto per_case = case_scores(records);
  const double auc = roc_auc(per_case, labels);

  std::size_t evaluated = 0;
  std::size_t positives = 0;
  for (const auto& [case_id, label] : labels) {
    if (per_case.contains(case_id)) {
      ++evaluated;
      positives += label == 1 ? 1 : 0;
    }
  }
  if (!opt.case_scores_out.empty()) {
    Output cs(opt.case_scores_out, out);
    cs.stream() << "case_id,score\n";
    for (const auto& [case_id, score] : per_case) {
      write_csv_field(cs.stream(), case_id);
      std::string v;
      text::append_double(v, score);
      cs.stream() << ',' << v << '\n';
    }
    cs.finish();
  }
  nlohmann::ordered_json report;
  report["auc"] = auc;
  report["cases"] = evaluated;
  report["positives"] = positives;
  report["negatives"] = evaluated - positives;
  Output target(opt.output, out);
  target.stream() << report.dump() << "\n";
  target.finish();
  return 0;
}

struct SynthOptions {
  std::string templates;
  SynthConfig config;
  std::string events_out;
  std::string labels_out;
};

int cmd_synth(const SynthOptions& opt, std::ostream& out) {
  const auto templates = opt.templates.empty() ? default_templates() : load_templates(opt.templates);
  const SynthOutput data = generate(templates, opt.config);
  {
    Output events(opt.events_out, out);
    write_events_ndjson(events.stream(), data.events);
    events.finish();
  }
  Output labels(opt.labels_out, out);
  write_labels(labels.stream(), data.labels);
  labels.finish();
  return 0;
}

int cmd_bench(const BenchConfig& config, std::ostream& out) {
  out << bench_report_json(run_bench(config)) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transition-matrix feature generation for concurrent event streams", "transfeat"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags override)");
  app.require_subcommand(1);

  // vocab
  InputOptions vocab_in;
  std::size_t vocab_k = 50;
  std::string vocab_out;
  auto* vocab = app.add_subcommand("vocab", "Build the top-k event-class vocabulary");
  vocab_in.add_to(*vocab);
  vocab->add_option("-k,--top-k", vocab_k, "Number of visible classes")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  vocab->add_option("-o,--output", vocab_out, "vocab.json path")->required();

  // generate
  InputOptions gen_in;
  GenerateOptions gen;
  Timestamp idle_timeout = 0;
  auto* generate_cmd = app.add_subcommand("generate", "Emit one transition-count matrix per event");
  gen_in.add_to(*generate_cmd);
  generate_cmd->add_option("--vocab", gen.vocab_path, "vocab.json from `vocab`")->required();
  generate_cmd->add_option("-l,--window", gen.window, "Sliding window length in transitions")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  auto* idle_opt = generate_cmd->add_option("--idle-timeout", idle_timeout,
                                            "Close cases idle longer than this (timestamp units)")
                       ->check(CLI::PositiveNumber);
  generate_cmd->add_flag("--flush", gen.flush, "Close all open cases at end of input");
  generate_cmd->add_option("--format", gen.format, "sparse-ndjson or dense-csv")
      ->capture_default_str()
      ->check(CLI::IsMember({"sparse-ndjson", "dense-csv"}));
  generate_cmd->add_flag("--normalize", gen.normalize, "Divide counts by the window length");
  generate_cmd->add_option("-o,--output", gen.output, "Output path, '-' for stdout")
      ->capture_default_str();

  // score
  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "Score frames against a running-mean profile");
  score_cmd->add_option("--frames", score.frames, "Frames written by `generate`")->required();
  score_cmd->add_option("--format", score.format, "sparse-ndjson or dense-csv")
      ->capture_default_str()
      ->check(CLI::IsMember({"sparse-ndjson", "dense-csv"}));
  score_cmd->add_flag("--frames-normalized", score.frames_normalized,
                      "Frames were written with --normalize");
  score_cmd->add_option("--vocab", score.vocab_path, "vocab.json used for the frames")->required();
  score_cmd->add_option("-l,--window", score.window, "Window length used for the frames")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  score_cmd->add_option("--warmup", score.warmup, "Frames used to train the profile")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  score_cmd->add_flag("--update-after-warmup", score.update_after_warmup,
                      "Keep updating the profile after warm-up");
  score_cmd->add_option("-o,--output", score.output, "scores.ndjson path, '-' for stdout")
      ->capture_default_str();

  // eval
  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Case-level ROC AUC from scores and labels");
  eval_cmd->add_option("--scores", eval.scores, "scores.ndjson")->required();
  eval_cmd->add_option("--labels", eval.labels, "labels CSV (case_id,label)")->required();
  eval_cmd->add_option("--case-scores-out", eval.case_scores_out, "Write per-case maxima as CSV");
  eval_cmd->add_option("-o,--output", eval.output, "Report path, '-' for stdout")
      ->capture_default_str();

  // synth
  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate labeled synthetic concurrent traces");
  synth_cmd->add_option("--templates", synth.templates, "Template JSON (default: built-in set)");
  synth_cmd->add_option("--cases", synth.config.n_cases, "Number of cases")->capture_default_str();
  synth_cmd->add_option("--anomaly-template", synth.config.anomaly_template)->capture_default_str();
  synth_cmd->add_option("--anomaly-rate", synth.config.anomaly_rate)
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--arrival-rate", synth.config.arrival_rate, "Cases per second")
      ->capture_default_str();
  synth_cmd->add_option("--event-rate", synth.config.event_rate, "Events per second in a case")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.config.seed)->capture_default_str();
  synth_cmd->add_option("--normal-prefix", synth.config.normal_prefix,
                        "Leading cases forced normal")
      ->capture_default_str();
  synth_cmd->add_option("--max-case-events", synth.config.max_case_events)->capture_default_str();
  synth_cmd->add_option("--events-out", synth.events_out, "Events NDJSON path")->required();
  synth_cmd->add_option("--labels-out", synth.labels_out, "Labels CSV path")->required();

  // bench
  BenchConfig bench;
  bool no_emit = false;
  auto* bench_cmd = app.add_subcommand("bench", "Measure engine throughput and latency");
  bench_cmd->add_option("--events", bench.n_events)->capture_default_str();
  bench_cmd->add_option("--cases", bench.n_cases, "Concurrently open cases")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("-k,--top-k", bench.k)->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("-l,--window", bench.window)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();
  bench_cmd->add_flag("--no-emit", no_emit, "Skip building sparse matrices per frame");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream usage_out;
    std::ostringstream usage_err;
    const int code = app.exit(e, usage_out, usage_err);
    out << usage_out.str();
    err << usage_err.str();
    return code;
  }

  try {
    if (*vocab) return cmd_vocab(vocab_in, vocab_k, vocab_out, err);
    if (*generate_cmd) {
      if (*idle_opt) gen.idle_timeout = idle_timeout;
      return cmd_generate(gen_in, gen, out, err);
    }
    if (*score_cmd) return cmd_score(score, out);
    if (*eval_cmd) return cmd_eval(eval, out);
    if (*synth_cmd) return cmd_synth(synth, out);
    if (*bench_cmd) {
      bench.emit_entries = !no_emit;
      return cmd_bench(bench, out);
    }
  } catch (const Error& e) {
    err << "transfeat: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "transfeat: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace transfeat

#include "transfeat/scorer.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "transfeat/csv.hpp"
#include "transfeat/error.hpp"
#include "transfeat/text.hpp"

namespace transfeat {

void RunningProfile::update(std::span<const double> cells) {
  if (cells.size() != mean_.size()) {
    throw DimensionMismatch("profile expects " + std::to_string(mean_.size()) + " cells, got " +
                            std::to_string(cells.size()));
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double delta = cells[i] - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (cells[i] - mean_[i]);
  }
}

namespace {

void check_entries(const FeatureFrame& frame, std::size_t dim) {
  for (const auto& e : frame.entries) {
    if (e.row >= dim || e.col >= dim) {
      throw DimensionMismatch("frame " + std::to_string(frame.seq) + " has a cell outside a " +
                              std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
    }
  }
}

}  // namespace

void densify(const FeatureFrame& frame, std::size_t dim, std::size_t window,
             std::vector<double>& out) {
  check_entries(frame, dim);
  out.assign(dim * dim, 0.0);
  const double l = static_cast<double>(window);
  for (const auto& e : frame.entries) out[e.row * dim + e.col] = static_cast<double>(e.count) / l;
}

double distance_to_mean(const FeatureFrame& frame, std::span<const double> mean, std::size_t dim,
                        std::size_t window) {
  check_entries(frame, dim);
  if (mean.size() != dim * dim) throw DimensionMismatch("mean has the wrong size");
  const double l = static_cast<double>(window);
  double sum = 0.0;
  auto next = frame.entries.begin();
  for (std::size_t cell = 0; cell < mean.size(); ++cell) {
    double x = 0.0;
    if (next != frame.entries.end() && next->row * dim + next->col == cell) {
      x = static_cast<double>(next->count) / l;
      ++next;
    }
    const double d = x - mean[cell];
    sum += d * d;
  }
  return std::sqrt(sum);
}

Scorer::Scorer(ScorerConfig config) : config_(config), profile_(config.dim) {
  if (config_.warmup == 0) throw ConfigError("warmup must be at least 1");
  if (config_.window == 0) throw ConfigError("window length must be at least 1");
  if (config_.dim < kReservedCount) throw ConfigError("matrix dimension below reserved count");
}

double Scorer::score_frame(const FeatureFrame& frame) {
  if (seen_ < config_.warmup) {
    densify(frame, config_.dim, config_.window, dense_);
    profile_.update(dense_);
    ++seen_;
    return 0.0;
  }
  ++seen_;
  const double score = distance_to_mean(frame, profile_.mean(), config_.dim, config_.window);
  if (config_.update_after_warmup) {
    densify(frame, config_.dim, config_.window, dense_);
    profile_.update(dense_);
  }
  return score;
}

std::vector<ScoreRecord> score_frames_serial(std::span<const FeatureFrame> frames,
                                             const ScorerConfig& config) {
  Scorer scorer(config);
  std::vector<ScoreRecord> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(scorer.score(f));
  return out;
}

std::vector<ScoreRecord> score_frames_parallel(std::span<const FeatureFrame> frames,
                                               const ScorerConfig& config) {
  if (config.update_after_warmup) return score_frames_serial(frames, config);

  Scorer scorer(config);
  std::vector<ScoreRecord> out(frames.size());
  const std::size_t train = std::min(frames.size(), config.warmup);
  for (std::size_t i = 0; i < train; ++i) out[i] = scorer.score(frames[i]);

  const std::span<const double> mean = scorer.profile().mean();
  const auto n = static_cast<std::ptrdiff_t>(frames.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(train); i < n; ++i) {
    const auto& f = frames[static_cast<std::size_t>(i)];
    try {
      out[static_cast<std::size_t>(i)] = {f.seq, f.case_id,
                                          distance_to_mean(f, mean, config.dim, config.window)};
    } catch (...) {
#pragma omp critical(transfeat_score_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::map<std::string, double> case_scores(std::span<const ScoreRecord> records) {
  std::map<std::string, double> out;
  for (const auto& r : records) {
    auto [it, inserted] = out.emplace(r.case_id, r.score);
    if (!inserted) it->second = std::max(it->second, r.score);
  }
  return out;
}

double roc_auc(const std::map<std::string, double>& scores,
               const std::map<std::string, int>& labels) {
  std::vector<std::pair<double, int>> joined;
  joined.reserve(std::min(scores.size(), labels.size()));
  for (const auto& [case_id, label] : labels) {
    auto it = scores.find(case_id);
    if (it != scores.end()) joined.emplace_back(it->second, label);
  }
  std::sort(joined.begin(), joined.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double positive_rank_sum = 0.0;
  std::uint64_t positives = 0;
  std::size_t i = 0;
  while (i < joined.size()) {
    std::size_t j = i;
    while (j < joined.size() && joined[j].first == joined[i].first) ++j;
    // 1-based ranks i+1..j share their average.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (joined[t].second == 1) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::uint64_t negatives = joined.size() - positives;
  if (positives == 0 || negatives == 0) throw SingleClassError();
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

void write_scores(std::ostream& out, std::span<const ScoreRecord> records) {
  std::string line;
  for (const auto& r : records) {
    line.clear();
    line += "{\"seq\":";
    text::append_uint(line, r.seq);
    line += ",\"case\":";
    text::append_json_string(line, r.case_id);
    line += ",\"score\":";
    text::append_double(line, r.score);
    line += "}\n";
    out << line;
  }
  if (!out) throw IoError("failed writing scores");
}

std::vector<ScoreRecord> read_scores(std::istream& in) {
  std::vector<ScoreRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto doc = nlohmann::json::parse(line);
      ScoreRecord r;
      r.seq = doc.at("seq").get<std::uint64_t>();
      r.case_id = doc.at("case").get<std::string>();
      r.score = doc.at("score").get<double>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(lineno, std::string("bad score record: ") + ex.what());
    }
  }
  return out;
}

void write_labels(std::ostream& out, const std::map<std::string, int>& labels) {
  out << "case_id,label\n";
  for (const auto& [case_id, label] : labels) {
    write_csv_field(out, case_id);
    out << ',' << label << '\n';
  }
  if (!out) throw IoError("failed writing labels");
}

std::map<std::string, int> read_labels(std::istream& in) {
  std::map<std::string, int> out;
  CsvReader csv(in);
  std::vector<std::string> fields;
  try {
    if (!csv.next(fields)) return out;
    if (fields.size() != 2 || fields[0] != "case_id" || fields[1] != "label") {
      throw FormatError(csv.record_line(), "labels header must be 'case_id,label'");
    }
    while (csv.next(fields)) {
      if (fields.size() != 2) throw FormatError(csv.record_line(), "expected 2 fields");
      if (fields[1] != "0" && fields[1] != "1") {
        throw FormatError(csv.record_line(), "label must be 0 or 1");
      }
      out[fields[0]] = fields[1] == "1" ? 1 : 0;
    }
  } catch (const ParseError& err) {
    throw FormatError(err.line(), err.reason());
  }
  return out;
}

}  // namespace transfeat

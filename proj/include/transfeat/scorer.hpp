#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "transfeat/engine.hpp"

namespace transfeat {

// One-pass (Welford) elementwise mean and variance of dim x dim matrices.
class RunningProfile {
 public:
  RunningProfile() = default;
  explicit RunningProfile(std::size_t dim) : dim_(dim), mean_(dim * dim, 0.0), m2_(dim * dim, 0.0) {}

  void update(std::span<const double> cells);

  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t count() const noexcept { return count_; }
  std::span<const double> mean() const noexcept { return mean_; }
  std::span<const double> m2() const noexcept { return m2_; }
  // Population variance of one cell; 0 before any update.
  double variance(std::size_t cell) const noexcept {
    return count_ == 0 ? 0.0 : m2_[cell] / static_cast<double>(count_);
  }

 private:
  std::size_t dim_ = 0;
  std::uint64_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

struct ScorerConfig {
  std::size_t dim = 0;
  std::size_t window = 0;  // frame counts are divided by this
  std::size_t warmup = 100;
  bool update_after_warmup = false;
};

struct ScoreRecord {
  std::uint64_t seq = 0;
  std::string case_id;
  double score = 0.0;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

// Dense normalized copy of a frame's matrix. Throws DimensionMismatch.
void densify(const FeatureFrame& frame, std::size_t dim, std::size_t window,
             std::vector<double>& out);

// Elementwise L2 distance between the normalized frame and `mean`.
double distance_to_mean(const FeatureFrame& frame, std::span<const double> mean, std::size_t dim,
                        std::size_t window);

// Distance of each frame to a running mean. The first `warmup` frames score
// 0 and train the profile; afterwards the profile is frozen unless
// update_after_warmup is set.
class Scorer {
 public:
  explicit Scorer(ScorerConfig config);

  double score_frame(const FeatureFrame& frame);
  ScoreRecord score(const FeatureFrame& frame) {
    return {frame.seq, frame.case_id, score_frame(frame)};
  }

  bool warmed_up() const noexcept { return seen_ >= config_.warmup; }
  const RunningProfile& profile() const noexcept { return profile_; }
  const ScorerConfig& config() const noexcept { return config_; }

 private:
  ScorerConfig config_;
  RunningProfile profile_;
  std::uint64_t seen_ = 0;
  std::vector<double> dense_;
};

// Serial fold; reference for the parallel version, which scores the frozen
// post-warmup frames with OpenMP. Both give identical results.
std::vector<ScoreRecord> score_frames_serial(std::span<const FeatureFrame> frames,
                                             const ScorerConfig& config);
std::vector<ScoreRecord> score_frames_parallel(std::span<const FeatureFrame> frames,
                                               const ScorerConfig& config);

// Case score = highest event score of the case.
std::map<std::string, double> case_scores(std::span<const ScoreRecord> records);

// Mann-Whitney AUC over cases present in both maps; ties count 1/2.
// Throws SingleClassError.
double roc_auc(const std::map<std::string, double>& scores,
               const std::map<std::string, int>& labels);

// scores.ndjson: {"seq":0,"case":"c1","score":0.25}
void write_scores(std::ostream& out, std::span<const ScoreRecord> records);
std::vector<ScoreRecord> read_scores(std::istream& in);

// labels CSV: header "case_id,label", label 0 or 1.
void write_labels(std::ostream& out, const std::map<std::string, int>& labels);
std::map<std::string, int> read_labels(std::istream& in);

}  // namespace transfeat

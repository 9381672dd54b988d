#pragma once

#include <cstddef>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "transfeat/engine.hpp"

namespace transfeat {

// sparse-ndjson, one object per frame:
//   {"seq":0,"case":"c1","ts":5,"tr":[0,3],"m":[[0,3,1]]}
// with m sorted by (row, col).
//
// dense-csv: header "seq,case,ts,from,to,m_0_0,...", then one row per frame
// with the dim x dim matrix flattened row-major (row = from, col = to).
//
// With normalization every count is divided by the window length and
// printed with 9 significant digits.
enum class FrameFormat { SparseNdjson, DenseCsv };

FrameFormat parse_frame_format(std::string_view name);
std::string_view frame_format_name(FrameFormat format);

struct FrameWriteOptions {
  FrameFormat format = FrameFormat::SparseNdjson;
  std::size_t dim = 0;  // required for dense output
  bool normalize = false;
  std::size_t window = 0;  // divisor when normalizing
};

class FrameWriter {
 public:
  FrameWriter(std::ostream& out, FrameWriteOptions options);

  // Throws IoError when the stream goes bad.
  void write(const FeatureFrame& frame);
  std::size_t count() const noexcept { return count_; }

 private:
  void write_sparse(const FeatureFrame& frame);
  void write_dense(const FeatureFrame& frame);
  void put_value(std::uint32_t count);

  std::ostream& out_;
  FrameWriteOptions options_;
  std::size_t count_ = 0;
  std::string line_;
  std::vector<std::uint32_t> dense_;
};

std::size_t write_frames(std::span<const FeatureFrame> frames, std::ostream& out,
                         const FrameWriteOptions& options);

struct FrameReadOptions {
  FrameFormat format = FrameFormat::SparseNdjson;
  // Set when the input was written normalized: values are scaled back by it.
  std::optional<std::size_t> normalized_window;
  // When set, matrix indices must be below it.
  std::optional<std::size_t> dim;
};

class FrameReader {
 public:
  FrameReader(std::istream& in, FrameReadOptions options);
  ~FrameReader();

  // Throws FormatError with the offending line.
  std::optional<FeatureFrame> next();

  // Matrix dimension, known after the dense header or from the options.
  std::optional<std::size_t> dim() const noexcept { return dim_; }

 private:
  std::optional<FeatureFrame> next_sparse();
  std::optional<FeatureFrame> next_dense();
  std::uint32_t to_count(double value, std::size_t line) const;

  std::istream& in_;
  FrameReadOptions options_;
  std::size_t line_ = 0;
  bool header_read_ = false;
  std::optional<std::size_t> dim_;
  struct Csv;
  std::unique_ptr<Csv> csv_;
};

std::vector<FeatureFrame> read_frames(std::istream& in, const FrameReadOptions& options);

}  // namespace transfeat

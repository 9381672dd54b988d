#include "transfeat/featureio.hpp"

#include <charconv>
#include <cmath>

#include <json.hpp>

#include "transfeat/csv.hpp"
#include "transfeat/error.hpp"
#include "transfeat/text.hpp"

namespace transfeat {

FrameFormat parse_frame_format(std::string_view name) {
  if (name == "sparse-ndjson") return FrameFormat::SparseNdjson;
  if (name == "dense-csv") return FrameFormat::DenseCsv;
  throw ConfigError("unknown frame format '" + std::string(name) + "'");
}

std::string_view frame_format_name(FrameFormat format) {
  return format == FrameFormat::DenseCsv ? "dense-csv" : "sparse-ndjson";
}

// ---------------------------------------------------------------------------
// Writing

FrameWriter::FrameWriter(std::ostream& out, FrameWriteOptions options)
    : out_(out), options_(options) {
  if (options_.normalize && options_.window == 0) {
    throw ConfigError("normalized output needs the window length");
  }
  if (options_.format == FrameFormat::DenseCsv) {
    if (options_.dim == 0) throw ConfigError("dense output needs the matrix dimension");
    dense_.assign(options_.dim * options_.dim, 0);
  }
}

void FrameWriter::put_value(std::uint32_t count) {
  if (options_.normalize) {
    text::append_sig9(line_, static_cast<double>(count) / static_cast<double>(options_.window));
  } else {
    text::append_uint(line_, count);
  }
}

void FrameWriter::write_sparse(const FeatureFrame& frame) {
  line_ += "{\"seq\":";
  text::append_uint(line_, frame.seq);
  line_ += ",\"case\":";
  text::append_json_string(line_, frame.case_id);
  line_ += ",\"ts\":";
  text::append_uint(line_, frame.timestamp);
  line_ += ",\"tr\":[";
  text::append_uint(line_, frame.transition.from.value);
  line_.push_back(',');
  text::append_uint(line_, frame.transition.to.value);
  line_ += "],\"m\":[";
  for (std::size_t i = 0; i < frame.entries.size(); ++i) {
    const auto& e = frame.entries[i];
    if (i) line_.push_back(',');
    line_.push_back('[');
    text::append_uint(line_, e.row);
    line_.push_back(',');
    text::append_uint(line_, e.col);
    line_.push_back(',');
    put_value(e.count);
    line_.push_back(']');
  }
  line_ += "]}\n";
}

void FrameWriter::write_dense(const FeatureFrame& frame) {
  const std::size_t dim = options_.dim;
  if (count_ == 0) {
    line_ += "seq,case,ts,from,to";
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < dim; ++c) {
        line_ += ",m_";
        text::append_uint(line_, r);
        line_.push_back('_');
        text::append_uint(line_, c);
      }
    }
    line_.push_back('\n');
  }
  for (const auto& e : frame.entries) {
    if (e.row >= dim || e.col >= dim) {
      throw DimensionMismatch("frame entry outside a " + std::to_string(dim) + "x" +
                              std::to_string(dim) + " matrix");
    }
    dense_[e.row * dim + e.col] = e.count;
  }
  text::append_uint(line_, frame.seq);
  line_.push_back(',');
  if (frame.case_id.find_first_of(",\"\r\n") == std::string::npos) {
    line_ += frame.case_id;
  } else {
    line_.push_back('"');
    for (char ch : frame.case_id) {
      if (ch == '"') line_.push_back('"');
      line_.push_back(ch);
    }
    line_.push_back('"');
  }
  line_.push_back(',');
  text::append_uint(line_, frame.timestamp);
  line_.push_back(',');
  text::append_uint(line_, frame.transition.from.value);
  line_.push_back(',');
  text::append_uint(line_, frame.transition.to.value);
  for (std::uint32_t v : dense_) {
    line_.push_back(',');
    if (v == 0) {
      line_.push_back('0');
    } else {
      put_value(v);
    }
  }
  line_.push_back('\n');
  for (const auto& e : frame.entries) dense_[e.row * dim + e.col] = 0;
}

void FrameWriter::write(const FeatureFrame& frame) {
  line_.clear();
  if (options_.format == FrameFormat::DenseCsv) {
    write_dense(frame);
  } else {
    write_sparse(frame);
  }
  out_.write(line_.data(), static_cast<std::streamsize>(line_.size()));
  if (!out_) throw IoError("failed writing frame " + std::to_string(frame.seq));
  ++count_;
}

std::size_t write_frames(std::span<const FeatureFrame> frames, std::ostream& out,
                         const FrameWriteOptions& options) {
  FrameWriter writer(out, options);
  for (const auto& f : frames) writer.write(f);
  return writer.count();
}

// ---------------------------------------------------------------------------
// Reading

struct FrameReader::Csv {
  explicit Csv(std::istream& in) : reader(in) {}
  CsvReader reader;
  std::vector<std::string> fields;
};

FrameReader::FrameReader(std::istream& in, FrameReadOptions options)
    : in_(in), options_(options), dim_(options.dim) {
  if (options_.normalized_window && *options_.normalized_window == 0) {
    throw ConfigError("normalized window must be positive");
  }
  if (options_.format == FrameFormat::DenseCsv) csv_ = std::make_unique<Csv>(in_);
}

FrameReader::~FrameReader() = default;

std::optional<FeatureFrame> FrameReader::next() {
  return options_.format == FrameFormat::DenseCsv ? next_dense() : next_sparse();
}

std::uint32_t FrameReader::to_count(double value, std::size_t line) const {
  double scaled = value;
  if (options_.normalized_window) scaled *= static_cast<double>(*options_.normalized_window);
  const double rounded = std::round(scaled);
  if (!(rounded >= 0.0) || rounded > 4294967295.0 || std::fabs(scaled - rounded) > 1e-3) {
    throw FormatError(line, "matrix value is not a count");
  }
  return static_cast<std::uint32_t>(rounded);
}

namespace {

std::uint64_t json_uint(const nlohmann::json& v, std::size_t line, const char* what) {
  if (!v.is_number_unsigned()) {
    throw FormatError(line, std::string(what) + " is not a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::uint32_t json_index(const nlohmann::json& v, std::size_t line) {
  std::uint64_t x = json_uint(v, line, "matrix index");
  if (x > 0xFFFFFFFFu) throw FormatError(line, "matrix index out of range");
  return static_cast<std::uint32_t>(x);
}

void check_transition(const Transition& t, std::size_t line) {
  if (t.from == kEot || t.to == kSot) throw FormatError(line, "impossible transition");
}

}  // namespace

std::optional<FeatureFrame> FrameReader::next_sparse() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(line_, std::string("invalid JSON: ") + ex.what());
    }
    if (!doc.is_object()) throw FormatError(line_, "frame is not a JSON object");
    for (const char* key : {"seq", "case", "ts", "tr", "m"}) {
      if (!doc.contains(key)) throw FormatError(line_, std::string("missing '") + key + "'");
    }

    FeatureFrame f;
    f.seq = json_uint(doc["seq"], line_, "seq");
    if (!doc["case"].is_string()) throw FormatError(line_, "case is not a string");
    f.case_id = doc["case"].get<std::string>();
    f.timestamp = json_uint(doc["ts"], line_, "ts");
    const auto& tr = doc["tr"];
    if (!tr.is_array() || tr.size() != 2) throw FormatError(line_, "tr is not a pair");
    f.transition = {ClassId{json_index(tr[0], line_)}, ClassId{json_index(tr[1], line_)}};
    check_transition(f.transition, line_);

    const auto& m = doc["m"];
    if (!m.is_array()) throw FormatError(line_, "m is not an array");
    f.entries.reserve(m.size());
    for (const auto& cell : m) {
      if (!cell.is_array() || cell.size() != 3) throw FormatError(line_, "m entry is not a triple");
      SparseEntry e;
      e.row = json_index(cell[0], line_);
      e.col = json_index(cell[1], line_);
      if (!cell[2].is_number()) throw FormatError(line_, "m value is not a number");
      if (options_.normalized_window) {
        e.count = to_count(cell[2].get<double>(), line_);
      } else {
        e.count = static_cast<std::uint32_t>(json_index(cell[2], line_));
      }
      if (e.count == 0) throw FormatError(line_, "m holds a zero count");
      if (dim_ && (e.row >= *dim_ || e.col >= *dim_)) {
        throw FormatError(line_, "matrix index outside dimension");
      }
      if (!f.entries.empty()) {
        const auto& prev = f.entries.back();
        if (std::pair(prev.row, prev.col) >= std::pair(e.row, e.col)) {
          throw FormatError(line_, "m is not sorted by (row, col)");
        }
      }
      f.entries.push_back(e);
    }
    return f;
  }
  return std::nullopt;
}

namespace {

std::uint64_t field_uint(const std::string& s, std::size_t line, const char* what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(line, std::string(what) + " is not a non-negative integer");
  }
  return v;
}

}  // namespace

std::optional<FeatureFrame> FrameReader::next_dense() {
  auto& csv = *csv_;
  try {
    if (!header_read_) {
      header_read_ = true;
      if (!csv.reader.next(csv.fields)) return std::nullopt;
      line_ = csv.reader.record_line();
      static const char* kFixed[] = {"seq", "case", "ts", "from", "to"};
      if (csv.fields.size() < 5) throw FormatError(line_, "dense header too short");
      for (std::size_t i = 0; i < 5; ++i) {
        if (csv.fields[i] != kFixed[i]) throw FormatError(line_, "unexpected dense header");
      }
      const std::size_t cells = csv.fields.size() - 5;
      auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(cells))));
      if (d * d != cells) throw FormatError(line_, "matrix columns are not a square count");
      if (dim_ && *dim_ != d) throw FormatError(line_, "matrix dimension differs from expected");
      dim_ = d;
    }
    if (!csv.reader.next(csv.fields)) return std::nullopt;
  } catch (const ParseError& err) {
    throw FormatError(err.line(), err.reason());
  }
  line_ = csv.reader.record_line();
  const std::size_t d = *dim_;
  if (csv.fields.size() != 5 + d * d) throw FormatError(line_, "wrong number of columns");

  FeatureFrame f;
  f.seq = field_uint(csv.fields[0], line_, "seq");
  f.case_id = csv.fields[1];
  f.timestamp = field_uint(csv.fields[2], line_, "ts");
  f.transition = {ClassId{static_cast<std::uint32_t>(field_uint(csv.fields[3], line_, "from"))},
                  ClassId{static_cast<std::uint32_t>(field_uint(csv.fields[4], line_, "to"))}};
  check_transition(f.transition, line_);
  for (std::size_t cell = 0; cell < d * d; ++cell) {
    const std::string& s = csv.fields[5 + cell];
    if (s == "0") continue;
    std::uint32_t count = 0;
    if (options_.normalized_window) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw FormatError(line_, "matrix value is not a number");
      }
      count = to_count(v, line_);
    } else {
      std::uint64_t v = field_uint(s, line_, "matrix value");
      if (v > 0xFFFFFFFFu) throw FormatError(line_, "matrix value out of range");
      count = static_cast<std::uint32_t>(v);
    }
    if (count == 0) continue;
    f.entries.push_back({static_cast<std::uint32_t>(cell / d), static_cast<std::uint32_t>(cell % d),
                         count});
  }
  return f;
}

std::vector<FeatureFrame> read_frames(std::istream& in, const FrameReadOptions& options) {
  FrameReader reader(in, options);
  std::vector<FeatureFrame> out;
  while (auto f = reader.next()) out.push_back(std::move(*f));
  return out;
}

}  // namespace transfeat

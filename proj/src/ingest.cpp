#include "transfeat/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <queue>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "transfeat/csv.hpp"
#include "transfeat/handoff.hpp"

namespace transfeat {

using ordered_json = nlohmann::ordered_json;

InputFormat parse_input_format(std::string_view name) {
  if (name == "ndjson" || name == "jsonl") return InputFormat::Ndjson;
  if (name == "csv") return InputFormat::Csv;
  throw ConfigError("unknown input format '" + std::string(name) + "'");
}

InputFormat infer_input_format(std::string_view path) {
  auto dot = path.rfind('.');
  if (dot != std::string_view::npos && path.substr(dot) == ".csv") return InputFormat::Csv;
  return InputFormat::Ndjson;
}

namespace {

bool truthy(std::string_view v) {
  return v == "1" || v == "true" || v == "True" || v == "TRUE" || v == "yes";
}

std::optional<Timestamp> parse_timestamp_text(std::string_view text) {
  Timestamp value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return value;
}

std::string json_to_text(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

// Shared record-to-event mapping for both formats.
class RecordMapper {
 public:
  explicit RecordMapper(const Schema& schema) : schema_(schema) {}

  void check_class_fields(const Event& e, std::size_t line) const {
    for (const auto& field : schema_.class_fields) {
      if (e.find(field) == nullptr) {
        throw ParseError(line, "missing class field '" + field + "'");
      }
    }
  }

  bool is_special(std::string_view name) const {
    return name == schema_.case_field ||
           (schema_.timestamp_field && name == *schema_.timestamp_field) ||
           (schema_.end_field && name == *schema_.end_field);
  }

  const Schema& schema() const { return schema_; }

 private:
  const Schema& schema_;
};

class ReaderBase : public EventReader {
 public:
  ReaderBase(std::istream& in, const Schema& schema, ParseOptions options)
      : in_(in), schema_(schema), mapper_(schema_), options_(std::move(options)) {}

  std::optional<Event> next() override {
    while (true) {
      try {
        std::optional<Event> e = next_record();
        if (e) ++position_;
        return e;
      } catch (const ParseError& err) {
        if (options_.strict) throw;
        if (options_.on_error) options_.on_error(err);
      }
    }
  }

 protected:
  virtual std::optional<Event> next_record() = 0;

  std::istream& in_;
  Schema schema_;
  RecordMapper mapper_;
  ParseOptions options_;
  std::size_t position_ = 0;
};

class NdjsonReader final : public ReaderBase {
 public:
  using ReaderBase::ReaderBase;

 protected:
  std::optional<Event> next_record() override {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      return map(line);
    }
    return std::nullopt;
  }

 private:
  Event map(const std::string& line) {
    ordered_json doc;
    try {
      doc = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(line_, std::string("invalid JSON: ") + ex.what());
    }
    if (!doc.is_object()) throw ParseError(line_, "record is not a JSON object");

    Event e;
    auto case_it = doc.find(schema_.case_field);
    if (case_it == doc.end()) throw ParseError(line_, "missing case field");
    e.case_id = json_to_text(*case_it);
    if (e.case_id.empty()) throw ParseError(line_, "empty case field");

    if (schema_.timestamp_field) {
      auto ts_it = doc.find(*schema_.timestamp_field);
      if (ts_it == doc.end()) throw ParseError(line_, "missing timestamp field");
      if (ts_it->is_number_unsigned()) {
        e.timestamp = ts_it->get<Timestamp>();
      } else if (ts_it->is_string()) {
        auto ts = parse_timestamp_text(ts_it->get_ref<const std::string&>());
        if (!ts) throw ParseError(line_, "timestamp is not a non-negative integer");
        e.timestamp = *ts;
      } else {
        throw ParseError(line_, "timestamp is not a non-negative integer");
      }
    } else {
      e.timestamp = position_;
    }

    if (schema_.end_field) {
      auto end_it = doc.find(*schema_.end_field);
      if (end_it != doc.end()) {
        if (end_it->is_boolean()) {
          e.is_end = end_it->get<bool>();
        } else if (end_it->is_number()) {
          e.is_end = end_it->get<double>() != 0.0;
        } else if (end_it->is_string()) {
          e.is_end = truthy(end_it->get_ref<const std::string&>());
        }
      }
    }

    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (mapper_.is_special(it.key())) continue;
      e.attributes.push_back({it.key(), json_to_text(it.value())});
    }
    mapper_.check_class_fields(e, line_);
    return e;
  }

  std::size_t line_ = 0;
};

class CsvEventReader final : public ReaderBase {
 public:
  CsvEventReader(std::istream& in, const Schema& schema, ParseOptions options)
      : ReaderBase(in, schema, std::move(options)), csv_(in) {}

 protected:
  std::optional<Event> next_record() override {
    if (!header_read_) read_header();
    std::vector<std::string> fields;
    if (!csv_.next(fields)) return std::nullopt;
    std::size_t line = csv_.record_line();
    if (fields.size() != header_.size()) {
      throw ParseError(line, "expected " + std::to_string(header_.size()) + " fields, got " +
                                 std::to_string(fields.size()));
    }
    Event e;
    e.case_id = fields[case_col_];
    if (e.case_id.empty()) throw ParseError(line, "empty case field");
    if (ts_col_) {
      auto ts = parse_timestamp_text(fields[*ts_col_]);
      if (!ts) throw ParseError(line, "timestamp is not a non-negative integer");
      e.timestamp = *ts;
    } else {
      e.timestamp = position_;
    }
    if (end_col_) e.is_end = truthy(fields[*end_col_]);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (mapper_.is_special(header_[i])) continue;
      e.attributes.push_back({header_[i], std::move(fields[i])});
    }
    mapper_.check_class_fields(e, line);
    return e;
  }

 private:
  void read_header() {
    header_read_ = true;
    if (!csv_.next(header_)) {
      header_.clear();
      return;
    }
    std::size_t line = csv_.record_line();
    std::unordered_set<std::string> seen;
    std::optional<std::size_t> case_col;
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (!seen.insert(header_[i]).second) {
        throw ParseError(line, "duplicate column '" + header_[i] + "'");
      }
      if (header_[i] == schema_.case_field) case_col = i;
      if (schema_.timestamp_field && header_[i] == *schema_.timestamp_field) ts_col_ = i;
      if (schema_.end_field && header_[i] == *schema_.end_field) end_col_ = i;
    }
    if (!case_col) throw ParseError(line, "missing case field");
    if (schema_.timestamp_field && !ts_col_) throw ParseError(line, "missing timestamp field");
    for (const auto& field : schema_.class_fields) {
      if (!seen.contains(field)) throw ParseError(line, "missing class field '" + field + "'");
    }
    case_col_ = *case_col;
  }

  CsvReader csv_;
  bool header_read_ = false;
  std::vector<std::string> header_;
  std::size_t case_col_ = 0;
  std::optional<std::size_t> ts_col_;
  std::optional<std::size_t> end_col_;
};

// Keeps the stream it reads from alive.
class OwningReader final : public EventReader {
 public:
  OwningReader(std::unique_ptr<std::istream> stream, const StreamSource& source,
               const Schema& schema, ParseOptions options)
      : stream_(std::move(stream)),
        inner_(make_reader(*stream_, source.format, schema, std::move(options))) {}

  std::optional<Event> next() override { return inner_->next(); }

 private:
  std::unique_ptr<std::istream> stream_;
  std::unique_ptr<EventReader> inner_;
};

class StdinReader final : public EventReader {
 public:
  StdinReader(const StreamSource& source, const Schema& schema, ParseOptions options)
      : inner_(make_reader(std::cin, source.format, schema, std::move(options))) {}
  std::optional<Event> next() override { return inner_->next(); }

 private:
  std::unique_ptr<EventReader> inner_;
};

class ThreadedReader final : public EventReader {
 public:
  ThreadedReader(std::unique_ptr<EventReader> reader, std::size_t batch_size)
      : reader_(std::move(reader)), queue_(16) {
    worker_ = std::thread([this, batch_size] {
      std::vector<Event> batch;
      batch.reserve(batch_size);
      try {
        while (auto e = reader_->next()) {
          batch.push_back(std::move(*e));
          if (batch.size() >= batch_size) {
            if (!queue_.push(std::move(batch))) return;
            batch = {};
            batch.reserve(batch_size);
          }
        }
        if (!batch.empty()) queue_.push(std::move(batch));
        queue_.close();
      } catch (...) {
        // Events read before the failure are still delivered.
        if (!batch.empty() && !queue_.push(std::move(batch))) return;
        queue_.fail(std::current_exception());
      }
    });
  }

  ~ThreadedReader() override {
    queue_.cancel();
    if (worker_.joinable()) worker_.join();
  }

  std::optional<Event> next() override {
    while (index_ >= current_.size()) {
      auto batch = queue_.pop();
      if (!batch) return std::nullopt;
      current_ = std::move(*batch);
      index_ = 0;
    }
    return std::move(current_[index_++]);
  }

 private:
  std::unique_ptr<EventReader> reader_;
  Handoff<std::vector<Event>> queue_;
  std::thread worker_;
  std::vector<Event> current_;
  std::size_t index_ = 0;
};

class VectorReader final : public EventReader {
 public:
  explicit VectorReader(std::vector<Event> events) : events_(std::move(events)) {}
  std::optional<Event> next() override {
    if (index_ == events_.size()) return std::nullopt;
    return std::move(events_[index_++]);
  }

 private:
  std::vector<Event> events_;
  std::size_t index_ = 0;
};

}  // namespace

std::unique_ptr<EventReader> make_reader(std::istream& in, InputFormat format,
                                         const Schema& schema, ParseOptions options) {
  if (format == InputFormat::Csv) {
    return std::make_unique<CsvEventReader>(in, schema, std::move(options));
  }
  return std::make_unique<NdjsonReader>(in, schema, std::move(options));
}

std::unique_ptr<EventReader> open_reader(const StreamSource& source, const Schema& schema,
                                         ParseOptions options) {
  if (source.path == "-") {
    return std::make_unique<StdinReader>(source, schema, std::move(options));
  }
  auto file = std::make_unique<std::ifstream>(source.path, std::ios::binary);
  if (!*file) throw IoError("cannot open '" + source.path + "'");
  return std::make_unique<OwningReader>(std::move(file), source, schema, std::move(options));
}

std::unique_ptr<EventReader> make_threaded(std::unique_ptr<EventReader> reader,
                                           std::size_t batch_size) {
  return std::make_unique<ThreadedReader>(std::move(reader), batch_size == 0 ? 1 : batch_size);
}

std::vector<Event> read_all(EventReader& reader) {
  std::vector<Event> out;
  while (auto e = reader.next()) out.push_back(std::move(*e));
  return out;
}

std::vector<Event> parse_stream(std::istream& in, InputFormat format, const Schema& schema,
                                const ParseOptions& options) {
  auto reader = make_reader(in, format, schema, options);
  return read_all(*reader);
}

std::vector<Event> parse_stream(const StreamSource& source, const Schema& schema,
                                const ParseOptions& options) {
  auto reader = open_reader(source, schema, options);
  return read_all(*reader);
}

// ---------------------------------------------------------------------------
// Merge

namespace {

struct Buffered {
  Event event;
  std::size_t position;  // 1-based record index inside its source
};

struct BufferedLater {
  bool operator()(const Buffered& a, const Buffered& b) const {
    if (a.event.timestamp != b.event.timestamp) return a.event.timestamp > b.event.timestamp;
    return a.position > b.position;
  }
};

}  // namespace

// One source plus its order check / bounded reorder buffer.
struct StreamMerger::Lane {
  std::string source_id;
  std::unique_ptr<EventReader> reader;
  MergeOptions options;
  std::priority_queue<Buffered, std::vector<Buffered>, BufferedLater> buffer;
  std::size_t read = 0;
  Timestamp max_seen = 0;
  std::optional<Timestamp> last_released;
  bool exhausted = false;

  std::optional<Buffered> pull() {
    if (options.reorder_horizon == 0) {
      auto e = reader->next();
      if (!e) return std::nullopt;
      ++read;
      if (last_released && e->timestamp < *last_released) {
        throw OutOfOrderError(source_id, read);
      }
      last_released = e->timestamp;
      return Buffered{std::move(*e), read};
    }
    while (!exhausted) {
      if (!buffer.empty() && buffer.top().event.timestamp + options.reorder_horizon <= max_seen) {
        break;
      }
      auto e = reader->next();
      if (!e) {
        exhausted = true;
        break;
      }
      ++read;
      if (last_released && e->timestamp < *last_released) {
        if (options.on_clamp) options.on_clamp(source_id, read);
        e->timestamp = *last_released;
      }
      max_seen = std::max(max_seen, e->timestamp);
      buffer.push(Buffered{std::move(*e), read});
    }
    if (buffer.empty()) return std::nullopt;
    Buffered out = buffer.top();
    buffer.pop();
    last_released = out.event.timestamp;
    return out;
  }
};

struct StreamMerger::HeapEntry {
  Buffered item;
  std::size_t lane;
};

namespace {

struct EntryLater {
  template <typename Entry>
  bool operator()(const Entry& a, const Entry& b) const {
    if (a.item.event.timestamp != b.item.event.timestamp) {
      return a.item.event.timestamp > b.item.event.timestamp;
    }
    // Lanes are sorted by source id.
    if (a.lane != b.lane) return a.lane > b.lane;
    return a.item.position > b.item.position;
  }
};

}  // namespace

StreamMerger::StreamMerger(std::vector<Input> inputs, MergeOptions options) {
  std::sort(inputs.begin(), inputs.end(),
            [](const Input& a, const Input& b) { return a.source_id < b.source_id; });
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    if (inputs[i].source_id == inputs[i - 1].source_id) {
      throw ConfigError("duplicate source id '" + inputs[i].source_id + "'");
    }
  }
  for (auto& input : inputs) {
    auto lane = std::make_unique<Lane>();
    lane->source_id = std::move(input.source_id);
    lane->reader = std::move(input.reader);
    lane->options = options;
    lanes_.push_back(std::move(lane));
  }
}

StreamMerger::~StreamMerger() = default;

void StreamMerger::refill(std::size_t lane) {
  if (auto item = lanes_[lane]->pull()) {
    heap_.push_back(HeapEntry{std::move(*item), lane});
    std::push_heap(heap_.begin(), heap_.end(), EntryLater{});
  }
}

std::optional<Event> StreamMerger::next() {
  if (!primed_) {
    primed_ = true;
    for (std::size_t i = 0; i < lanes_.size(); ++i) refill(i);
  }
  if (heap_.empty()) return std::nullopt;
  std::pop_heap(heap_.begin(), heap_.end(), EntryLater{});
  HeapEntry top = std::move(heap_.back());
  heap_.pop_back();
  refill(top.lane);
  return std::move(top.item.event);
}

std::vector<Event> merge_streams(std::vector<NamedStream> sources, const MergeOptions& options) {
  std::vector<StreamMerger::Input> inputs;
  inputs.reserve(sources.size());
  for (auto& s : sources) {
    inputs.push_back({std::move(s.source_id), std::make_unique<VectorReader>(std::move(s.events))});
  }
  StreamMerger merger(std::move(inputs), options);
  return read_all(merger);
}

}  // namespace transfeat

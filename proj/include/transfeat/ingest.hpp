#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "transfeat/error.hpp"
#include "transfeat/event.hpp"

namespace transfeat {

enum class InputFormat { Ndjson, Csv };

// "ndjson"/"jsonl"/"csv"; throws ConfigError.
InputFormat parse_input_format(std::string_view name);
// From the file extension; NDJSON when unknown or "-".
InputFormat infer_input_format(std::string_view path);

// Which record fields carry the case id, timestamp and end marker. Every
// other field becomes an attribute, in record order.
struct Schema {
  std::string case_field = "case";
  std::optional<std::string> timestamp_field = "ts";
  std::optional<std::string> end_field;
  std::vector<std::string> class_fields;
};

struct StreamSource {
  std::string source_id;
  InputFormat format = InputFormat::Ndjson;
  std::string path;  // "-" is standard input
};

struct ParseOptions {
  // Abort on the first malformed record; otherwise skip and report it.
  bool strict = true;
  std::function<void(const ParseError&)> on_error;
};

// Pull-based record source.
class EventReader {
 public:
  virtual ~EventReader() = default;
  virtual std::optional<Event> next() = 0;
};

// `in` must outlive the reader.
std::unique_ptr<EventReader> make_reader(std::istream& in, InputFormat format,
                                         const Schema& schema, ParseOptions options = {});

// Opens the file (or standard input). Throws IoError.
std::unique_ptr<EventReader> open_reader(const StreamSource& source, const Schema& schema,
                                         ParseOptions options = {});

// Runs `reader` on its own thread; events are handed over in order.
std::unique_ptr<EventReader> make_threaded(std::unique_ptr<EventReader> reader,
                                           std::size_t batch_size = 1024);

std::vector<Event> parse_stream(std::istream& in, InputFormat format, const Schema& schema,
                                const ParseOptions& options = {});
std::vector<Event> parse_stream(const StreamSource& source, const Schema& schema,
                                const ParseOptions& options = {});

struct MergeOptions {
  // 0 means strict: any timestamp decrease inside a source is an
  // OutOfOrderError. Otherwise events up to this much late are reordered
  // through a per-source buffer; later stragglers are clamped forward.
  Timestamp reorder_horizon = 0;
  std::function<void(const std::string& source, std::size_t record)> on_clamp;
};

// k-way merge by timestamp. Equal timestamps go by source id, then by
// position inside the source.
class StreamMerger : public EventReader {
 public:
  struct Input {
    std::string source_id;
    std::unique_ptr<EventReader> reader;
  };

  StreamMerger(std::vector<Input> inputs, MergeOptions options = {});
  ~StreamMerger() override;

  std::optional<Event> next() override;

 private:
  struct Lane;
  std::vector<std::unique_ptr<Lane>> lanes_;
  struct HeapEntry;
  std::vector<HeapEntry> heap_;
  bool primed_ = false;

  void refill(std::size_t lane);
};

struct NamedStream {
  std::string source_id;
  std::vector<Event> events;
};

std::vector<Event> merge_streams(std::vector<NamedStream> sources,
                                 const MergeOptions& options = {});

// Drains any reader into a vector.
std::vector<Event> read_all(EventReader& reader);

}  // namespace transfeat

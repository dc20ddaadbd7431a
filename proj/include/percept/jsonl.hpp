#pragma once

#include <functional>
#include <string>
#include <vector>

namespace percept {

/// Reads a line-delimited file, returning (line_number, line) pairs for
/// non-empty lines. A trailing line without a newline is treated as a
/// partial write: it is dropped, the file is truncated to the last complete
/// line, and `on_truncate` (if set) is told how many bytes were cut.
std::vector<std::pair<long, std::string>> read_jsonl_lines(
    const std::string& path, bool truncate_partial_tail = false,
    const std::function<void(std::size_t)>& on_truncate = {});

/// Append-only line writer that flushes per line.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path);
  ~JsonlWriter();
  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  void append(const std::string& line);

 private:
  std::FILE* file_ = nullptr;
  std::string path_;
};

}  // namespace percept

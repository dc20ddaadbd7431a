#include "percept/jsonl.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace percept {

std::vector<std::pair<long, std::string>> read_jsonl_lines(
    const std::string& path, bool truncate_partial_tail,
    const std::function<void(std::size_t)>& on_truncate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  in.close();

  std::size_t complete = content.size();
  if (!content.empty() && content.back() != '\n') {
    std::size_t last_newline = content.find_last_of('\n');
    complete = last_newline == std::string::npos ? 0 : last_newline + 1;
    if (truncate_partial_tail) {
      std::filesystem::resize_file(path, complete);
      if (on_truncate) on_truncate(content.size() - complete);
    }
    content.resize(complete);
  }

  std::vector<std::pair<long, std::string>> lines;
  long line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    ++line_no;
    std::string line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos)
      lines.emplace_back(line_no, std::move(line));
    start = end + 1;
  }
  return lines;
}

JsonlWriter::JsonlWriter(const std::string& path) : path_(path) {
  std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  file_ = std::fopen(path.c_str(), "ab");
  if (!file_) throw std::runtime_error("cannot open file for append: " + path);
}

JsonlWriter::~JsonlWriter() {
  if (file_) std::fclose(file_);
}

void JsonlWriter::append(const std::string& line) {
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
      std::fputc('\n', file_) == EOF || std::fflush(file_) != 0)
    throw std::runtime_error("write failed: " + path_);
}

}  // namespace percept

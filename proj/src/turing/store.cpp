#include <string>

#include "tumorsynth/core/error.hpp"
#include "tumorsynth/turing/event_log.hpp"

namespace tumorsynth::turing {

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  bool needs_newline = false;
  {
    std::ifstream in(path_, std::ios::binary | std::ios::ate);
    if (in && in.tellg() > 0) {
      in.seekg(-1, std::ios::end);
      needs_newline = in.get() != '\n';
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_) fail(ErrorCode::Io, "cannot open event log " + path_.string());
  if (needs_newline) out_ << '\n';
}

std::vector<nlohmann::json> EventLog::read_all() const {
  skipped_ = 0;
  std::vector<nlohmann::json> events;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      ++skipped_;  // torn write from an earlier crash
      continue;
    }
    events.push_back(std::move(j));
  }
  return events;
}

void EventLog::append(const nlohmann::json& event) {
  std::lock_guard lock(mutex_);
  out_ << event.dump() << '\n';
  out_.flush();
  if (!out_) fail(ErrorCode::Io, "event log write failed: " + path_.string());
}

}  // namespace tumorsynth::turing

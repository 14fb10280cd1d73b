#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <vector>

#include <json.hpp>

namespace tumorsynth::turing {

// Append-only JSON-lines file. Each append is flushed before returning.
// Unparsable lines (torn writes) are skipped on read and counted.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path);

  std::vector<nlohmann::json> read_all() const;
  void append(const nlohmann::json& event);
  const std::filesystem::path& path() const { return path_; }
  std::size_t skipped() const { return skipped_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
  std::ofstream out_;
  mutable std::size_t skipped_ = 0;
};

}  // namespace tumorsynth::turing

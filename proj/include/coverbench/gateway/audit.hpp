#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>

namespace coverbench::gateway {

// Append-only JSONL request/response log. Thread-safe; one line per call.
class AuditLog {
 public:
  explicit AuditLog(const std::filesystem::path& path);

  void record(const std::string& provider_id, const std::string& model,
              const std::string& kind, const std::string& request_hash,
              double latency_ms, const std::string& status,
              std::size_t response_chars = 0);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace coverbench::gateway

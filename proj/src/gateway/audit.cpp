#include "coverbench/gateway/audit.hpp"

#include <chrono>
#include <stdexcept>

#include <json.hpp>

namespace coverbench::gateway {

AuditLog::AuditLog(const std::filesystem::path& path) {
  auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  out_.open(path, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open audit log: " + path.string());
}

void AuditLog::record(const std::string& provider_id, const std::string& model,
                      const std::string& kind,
                      const std::string& request_hash, double latency_ms,
                      const std::string& status, std::size_t response_chars) {
  auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
                 .count();
  nlohmann::json j{{"ts_ms", now},
                   {"provider", provider_id},
                   {"model", model},
                   {"kind", kind},
                   {"request_hash", request_hash},
                   {"latency_ms", latency_ms},
                   {"status", status},
                   {"response_chars", response_chars}};
  std::lock_guard<std::mutex> lock(mu_);
  out_ << j.dump() << "\n";
  out_.flush();
}

}  // namespace coverbench::gateway

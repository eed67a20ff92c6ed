#pragma once

// Output files: fixed-format CSV rows, SHA-256 digests and the run manifest.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace stray::cli {

struct Artifact {
  std::string name;  // file name inside the output directory
  std::string content;
};

/// Seventeen significant digits, enough to round-trip any double.
std::string format_double(double v);

/// Builds CSV text one cell at a time.
class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header);
  Csv& operator<<(double v);
  Csv& operator<<(long v);
  Csv& operator<<(int v) { return *this << static_cast<long>(v); }
  Csv& operator<<(std::string_view s);
  void end_row();
  std::string str() const { return out_; }

 private:
  void sep();
  std::string out_;
  bool fresh_ = true;
};

std::string sha256_hex(std::string_view data);

/// Write every artifact into `dir` and a manifest.json listing each with its size and digest.
/// Returns the manifest.
nlohmann::json write_artifacts(const std::filesystem::path& dir, const std::vector<Artifact>& files,
                               nlohmann::json manifest);

}  // namespace stray::cli

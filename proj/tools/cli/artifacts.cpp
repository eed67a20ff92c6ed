#include "artifacts.hpp"

#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

#include "stray/errors.hpp"

namespace stray::cli {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Csv::Csv(const std::vector<std::string>& header) {
  for (const auto& h : header) *this << std::string_view(h);
  end_row();
}

void Csv::sep() {
  if (!fresh_) out_ += ',';
  fresh_ = false;
}

Csv& Csv::operator<<(double v) {
  sep();
  out_ += format_double(v);
  return *this;
}

Csv& Csv::operator<<(long v) {
  sep();
  out_ += std::to_string(v);
  return *this;
}

Csv& Csv::operator<<(std::string_view s) {
  sep();
  out_ += s;
  return *this;
}

void Csv::end_row() {
  out_ += '\n';
  fresh_ = true;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::SolverFailure, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Config, "cannot write '" + p.string() + "'", "out");
  out << content;
  if (!out) throw Error(ErrorKind::Config, "failed writing '" + p.string() + "'", "out");
}

}  // namespace

nlohmann::json write_artifacts(const std::filesystem::path& dir, const std::vector<Artifact>& files,
                               nlohmann::json manifest) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot create output directory '" + dir.string() + "'", "out");
  nlohmann::json list = nlohmann::json::array();
  for (const auto& f : files) {
    write_file(dir / f.name, f.content);
    list.push_back({{"name", f.name}, {"bytes", f.content.size()}, {"sha256", sha256_hex(f.content)}});
  }
  manifest["files"] = list;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace stray::cli

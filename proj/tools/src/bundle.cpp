#include "fedgan_cli/bundle.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include "json.hpp"
#include <stdexcept>

namespace fedgan::cli {

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: digest initialisation failed");
    }
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("sha256: update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw std::runtime_error("sha256: final failed");
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      out += buf;
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

Bundle::Bundle(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  const auto manifest = dir_ / kManifestName;
  if (!std::filesystem::exists(manifest)) return;
  std::ifstream in(manifest);
  const nlohmann::json j = nlohmann::json::parse(in);
  status_ = j.value("status", "ok");
  error_ = j.value("error", "");
  notices_ = j.value("notices", std::vector<std::string>{});
  checks_ = j.value("checks", std::map<std::string, std::string>{});
  files_ = j.value("files", std::map<std::string, std::string>{});
}

bool Bundle::has(const std::string& name) const { return std::filesystem::is_regular_file(dir_ / name); }

void Bundle::add_notice(const std::string& text) {
  if (std::find(notices_.begin(), notices_.end(), text) == notices_.end()) notices_.push_back(text);
}

void Bundle::write_manifest() {
  files_.clear();
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir_)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = std::filesystem::relative(entry.path(), dir_).generic_string();
    if (rel == kManifestName) continue;
    files_[rel] = sha256_file(entry.path());
  }
  nlohmann::json j;
  j["status"] = status_;
  j["error"] = error_;
  j["notices"] = notices_;
  j["checks"] = checks_;
  j["files"] = files_;
  std::ofstream out(dir_ / kManifestName);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest in " + dir_.string());
}

std::vector<std::string> Bundle::verify_hashes() const {
  std::vector<std::string> bad;
  for (const auto& [name, digest] : files_) {
    const auto p = dir_ / name;
    if (!std::filesystem::is_regular_file(p) || sha256_file(p) != digest) bad.push_back(name);
  }
  return bad;
}

}  // namespace fedgan::cli

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fedgan::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

inline constexpr const char* kManifestName = "manifest.json";

/// Output directory of one run plus its manifest.json. The manifest lists
/// every other regular file with its SHA-256 digest, the run status, the
/// error text of an aborted run and notices about skipped outputs. It holds
/// no timestamps, so identical inputs give an identical manifest.
class Bundle {
 public:
  /// Opens (and creates) the directory; reads an existing manifest.
  explicit Bundle(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path file(const std::string& name) const { return dir_ / name; }
  bool has(const std::string& name) const;

  /// "ok", "violated", "aborted" or "error".
  const std::string& status() const { return status_; }
  void set_status(const std::string& status) { status_ = status; }
  void set_error(const std::string& error) { error_ = error; }
  const std::string& error() const { return error_; }

  /// Adds a notice once; repeated text is ignored.
  void add_notice(const std::string& text);
  const std::vector<std::string>& notices() const { return notices_; }
  void set_check(const std::string& name, const std::string& verdict) { checks_[name] = verdict; }
  const std::map<std::string, std::string>& checks() const { return checks_; }

  /// Re-hashes every file and rewrites the manifest.
  void write_manifest();
  /// Digests recorded in the manifest, by relative file name.
  const std::map<std::string, std::string>& files() const { return files_; }
  /// Names whose current digest differs from the manifest (or are missing).
  std::vector<std::string> verify_hashes() const;

 private:
  std::filesystem::path dir_;
  std::string status_ = "ok";
  std::string error_;
  std::vector<std::string> notices_;
  std::map<std::string, std::string> checks_;
  std::map<std::string, std::string> files_;
};

}  // namespace fedgan::cli

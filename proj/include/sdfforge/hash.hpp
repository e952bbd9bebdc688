#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sdfforge {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);  // throws IoError

// Every regular file under root, as sorted generic relative paths.
std::vector<std::string> list_tree(const std::filesystem::path& root);

inline constexpr const char* kChecksumFile = "checksums.sha256";

// `<hex>  <relative path>` per file under root, excluding the checksum file
// and anything under the `skip` top-level directories.
std::string tree_checksums(const std::filesystem::path& root, const std::vector<std::string>& skip = {});
void write_checksums(const std::filesystem::path& root, const std::vector<std::string>& skip = {});

struct ChecksumProblem {
  std::string path;
  std::string reason;  // "modified", "missing", "untracked"
};

std::vector<ChecksumProblem> verify_checksums(const std::filesystem::path& root,
                                              const std::vector<std::string>& skip = {});

}  // namespace sdfforge

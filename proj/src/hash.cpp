#include "sdfforge/hash.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "sdfforge/error.hpp"

namespace sdfforge {

namespace fs = std::filesystem;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("SHA-256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw Error("SHA-256 final failed");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::vector<std::string> list_tree(const fs::path& root) {
  std::vector<std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

bool skipped(const std::string& rel, const std::vector<std::string>& skip) {
  if (rel == kChecksumFile) return true;
  return std::any_of(skip.begin(), skip.end(), [&](const std::string& d) { return rel.starts_with(d + "/"); });
}

}  // namespace

std::string tree_checksums(const fs::path& root, const std::vector<std::string>& skip) {
  std::string out;
  for (const auto& rel : list_tree(root)) {
    if (skipped(rel, skip)) continue;
    out += sha256_file(root / rel) + "  " + rel + "\n";
  }
  return out;
}

void write_checksums(const fs::path& root, const std::vector<std::string>& skip) {
  const auto text = tree_checksums(root, skip);
  std::ofstream out(root / kChecksumFile, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + (root / kChecksumFile).string());
}

std::vector<ChecksumProblem> verify_checksums(const fs::path& root, const std::vector<std::string>& skip) {
  std::ifstream in(root / kChecksumFile, std::ios::binary);
  if (!in) return {{kChecksumFile, "missing"}};
  std::map<std::string, std::string> expected;
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() < 67 || line.compare(64, 2, "  ") != 0) return {{kChecksumFile, "malformed"}};
    expected[line.substr(66)] = line.substr(0, 64);
  }
  std::vector<ChecksumProblem> problems;
  std::map<std::string, bool> seen;
  for (const auto& rel : list_tree(root)) {
    if (skipped(rel, skip)) continue;
    const auto it = expected.find(rel);
    if (it == expected.end()) {
      problems.push_back({rel, "untracked"});
    } else if (sha256_file(root / rel) != it->second) {
      problems.push_back({rel, "modified"});
    }
    seen[rel] = true;
  }
  for (const auto& [rel, digest] : expected) {
    if (!seen.count(rel)) problems.push_back({rel, "missing"});
  }
  std::sort(problems.begin(), problems.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return problems;
}

}  // namespace sdfforge

#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

namespace testutil {

inline std::filesystem::path source_dir() {
#ifdef ANNOTEVAL_SOURCE_DIR
  return ANNOTEVAL_SOURCE_DIR;
#else
  return ".";
#endif
}

inline std::filesystem::path data_dir() { return source_dir() / "data"; }

inline std::filesystem::path default_typology_path() {
  return data_dir() / "typology" / "default.json";
}

/// Fresh directory under the build tree's temp space.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path() / "annoteval-tests";
    std::filesystem::create_directories(base);
    for (int i = 0;; ++i) {
      auto candidate = base / (tag + "-" + std::to_string(i));
      if (!std::filesystem::exists(candidate)) {
        std::filesystem::create_directories(candidate);
        path_ = candidate;
        break;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil

#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace semiae::fixture {

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    do {
      path_ = base / ("semiae-test-" + std::to_string(rd()));
    } while (std::filesystem::exists(path_));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A complete ML-100K style directory: every user rates `per_user`
/// consecutive items with a repeating mix of likes and dislikes.
inline void write_ml100k(const std::filesystem::path& dir, int users = 6, int items = 8, int per_user = 5) {
  std::string data;
  for (int u = 1; u <= users; ++u) {
    for (int k = 0; k < per_user; ++k) {
      const int item = (u + k) % items + 1;
      const int stars = (u * 3 + k) % 5 + 1;
      data += std::to_string(u) + "\t" + std::to_string(item) + "\t" + std::to_string(stars) + "\t" +
              std::to_string(880000000 + u * 10 + k) + "\n";
    }
  }
  write_text(dir / "u.data", data);
  const char* occupations[] = {"technician", "other", "writer", "executive", "student"};
  const int ages[] = {24, 53, 23, 42, 17, 33};
  std::string people;
  for (int u = 1; u <= users; ++u) {
    people += std::to_string(u) + "|" + std::to_string(ages[u % 6]) + "|" + (u % 2 ? "M" : "F") + "|" +
              occupations[u % 5] + "|" + std::to_string(10000 + u) + "\n";
  }
  write_text(dir / "u.user", people);
  std::string movies;
  for (int i = 1; i <= items; ++i) {
    std::string flags;
    for (int g = 0; g < 19; ++g) flags += (g == i % 19 || g == (i + 5) % 19) ? "|1" : "|0";
    const std::string year = std::to_string(1950 + i);
    movies += std::to_string(i) + "|Movie " + std::to_string(i) + " (" + year + ")|01-Jan-" + year +
              "||http://example.org" + flags + "\n";
  }
  write_text(dir / "u.item", movies);
}

}  // namespace semiae::fixture

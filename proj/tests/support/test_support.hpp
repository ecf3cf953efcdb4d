// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace psdeob::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(PSDEOB_TEST_DATA_DIR) / name;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string read_data(const std::string& name) { return read_file(data_path(name)); }

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// The eight URLs of the golden sample, in order.
inline const char* const kGoldenUrls[] = {
    "https://paasologrp.com/parseopmlo/5/",
    "http://launch.tactikafacewear.com/wp-content/Uk/",
    "https://singohotel.com/dashboardl/q/",
    "https://www.mymathlabhomework.com/wp-content/o/",
    "https://dietherbsindia.com/assets/k8oo/",
    "https://dev-tech.eu/demoshop/P0/",
    "https://mithraa.co/nMT/",
    "http://chess-pgn.com/win-raid/l6T5/",
};

}  // namespace psdeob::testing

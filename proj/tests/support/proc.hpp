#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

// Minimal helper for driving the CLI binary from tests.

namespace qpa::testsupport {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

// Runs `exe args...` through the shell with stdout/stderr captured.
inline RunResult run_cli(const std::string& args) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "qpa_cli_io";
  std::filesystem::create_directories(dir);
  static int counter = 0;
  const std::string out_path = (dir / ("out" + std::to_string(counter))).string();
  const std::string err_path = (dir / ("err" + std::to_string(counter))).string();
  ++counter;

  const std::string cmd = std::string(QPA_CLI_PATH) + " " + args + " > " + out_path +
                          " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_file(out_path);
  result.err = read_file(err_path);
  return result;
}

// A scratch directory unique to the test process.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("qpa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace qpa::testsupport

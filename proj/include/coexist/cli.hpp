#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace coexist::cli {

/// Output files of one run, held in memory and committed together. Each file
/// goes to a temporary name first and is renamed into place; if any write
/// fails, files already committed by this set are removed.
class OutputSet {
public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content);
  bool empty() const { return files_.empty(); }
  const std::map<std::string, std::string>& files() const { return files_; }
  void commit() const;

private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

/// Entry point behind the `coexist` executable. Returns the process exit
/// status: 0 success, 2 validation, 3 infeasible, 4 numerical.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coexist::cli

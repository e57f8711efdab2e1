#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ff {

enum class Command { Train, Cl, Dynamics, Surface, Sparsity };

Command parse_command(const std::string& name);
const char* command_name(Command c);

// Flat key = value experiment configuration. Every command owns an explicit
// key set with defaults; unknown keys are hard errors so a typo cannot
// silently fall back to a default hyper-parameter.
class ExperimentConfig {
 public:
  explicit ExperimentConfig(Command command);

  Command command() const { return command_; }

  // Rejects keys outside the command's registry, listing the valid ones.
  void set(const std::string& key, const std::string& value);

  // key = value lines; blank lines and '#' comments are skipped.
  void load_file(const std::string& path);

  bool has_key(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // Resolved (key, value) pairs including defaults, sorted by key.
  std::vector<std::pair<std::string, std::string>> resolved() const;
  // Canonical "key = value" text of the resolved config.
  std::string echo_text() const;

 private:
  Command command_;
  std::map<std::string, std::string> values_;  // defaults overlaid by sets
};

// Resolved dataset file locations: explicit path keys win, otherwise
// data_dir/dataset/<standard idx name>[.gz].
struct DataPaths {
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
};
DataPaths resolve_data_paths(const ExperimentConfig& cfg, bool need_train);

}  // namespace ff

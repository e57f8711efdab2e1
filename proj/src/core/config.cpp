#include "core/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace ff {
namespace {

struct KeySpec {
  const char* name;
  // Default per command; nullptr means the key does not exist there.
  const char* train;
  const char* cl;
  const char* dynamics;
  const char* surface;
  const char* sparsity;
};

// Model/loss defaults follow the experiment tables: width 1400, 2 hidden
// layers, k-WTA 15, residual inputs, theta 2, clamp 1e-4, pattern 100 @ 0.1,
// batch 512; lr 1e-4 with 100 epochs for static runs, lr 1e-3 with 2 epochs
// per task for continual runs.
constexpr KeySpec kKeys[] = {
    {"out", "out", "out", "out", "out", "out"},
    {"seed", "1", "1", nullptr, nullptr, "1"},
    {"data_dir", "", "", nullptr, nullptr, ""},
    {"dataset", "mnist", "mnist", nullptr, nullptr, "mnist"},
    {"train_images", "", "", nullptr, nullptr, nullptr},
    {"train_labels", "", "", nullptr, nullptr, nullptr},
    {"test_images", "", "", nullptr, nullptr, ""},
    {"test_labels", "", "", nullptr, nullptr, ""},
    {"algorithm", "sffa", "sffa", nullptr, "sffa", nullptr},
    {"hidden_layers", "2", "2", nullptr, nullptr, nullptr},
    {"width", "1400", "1400", nullptr, nullptr, nullptr},
    {"kwta_k", "15", "15", nullptr, nullptr, nullptr},
    {"residual", "true", "true", nullptr, nullptr, nullptr},
    {"activation", "auto", "auto", nullptr, nullptr, nullptr},
    {"theta", "2", "2", nullptr, nullptr, nullptr},
    {"epsilon", "1e-08", "1e-08", nullptr, "1e-08", nullptr},
    {"clamp", "0.0001", "0.0001", nullptr, nullptr, nullptr},
    {"reg_alpha", "1", "1", nullptr, nullptr, nullptr},
    {"regularize", "true", "true", nullptr, nullptr, nullptr},
    {"norm_squared", "false", "false", nullptr, nullptr, nullptr},
    {"skip_first_goodness", "false", "false", nullptr, nullptr, nullptr},
    {"goodness_pre_kwta", "false", "false", nullptr, nullptr, nullptr},
    {"pattern_size", "100", "100", nullptr, nullptr, nullptr},
    {"pattern_density", "0.1", "0.1", nullptr, nullptr, nullptr},
    {"batch", "512", "512", nullptr, nullptr, nullptr},
    {"lr", "0.0001", "0.001", nullptr, nullptr, nullptr},
    {"epochs", "100", "2", nullptr, nullptr, nullptr},
    {"train_mode", "pair", nullptr, nullptr, nullptr, nullptr},
    {"scenario", nullptr, "class", nullptr, nullptr, nullptr},
    {"tasks", nullptr, "5", nullptr, nullptr, nullptr},
    {"strategy", nullptr, "naive", nullptr, nullptr, nullptr},
    {"runs", nullptr, "10", nullptr, nullptr, nullptr},
    {"lambda_ewc", nullptr, "100000", nullptr, nullptr, nullptr},
    {"lambda_si", nullptr, "1000", nullptr, nullptr, nullptr},
    {"epsilon_si", nullptr, "0.1", nullptr, nullptr, nullptr},
    {"replay_n", nullptr, "500", nullptr, nullptr, nullptr},
    {"gem_m", nullptr, "20", nullptr, nullptr, nullptr},
    {"gem_gamma", nullptr, "0.5", nullptr, nullptr, nullptr},
    {"mas_mu", nullptr, "1", nullptr, nullptr, nullptr},
    {"mas_alpha", nullptr, "0.5", nullptr, nullptr, nullptr},
    {"importance_samples", nullptr, "1024", nullptr, nullptr, nullptr},
    {"dyn_e", nullptr, nullptr, "0.02", nullptr, nullptr},
    {"dyn_i", nullptr, nullptr, "0.04", nullptr, nullptr},
    {"dyn_lr", nullptr, nullptr, "0.1", nullptr, nullptr},
    {"dyn_steps", nullptr, nullptr, "20", nullptr, nullptr},
    {"grid", nullptr, nullptr, nullptr, "101", nullptr},
    {"activity_max", nullptr, nullptr, nullptr, "8", nullptr},
    {"theta_max", nullptr, nullptr, nullptr, "4", nullptr},
    {"checkpoint", nullptr, nullptr, nullptr, nullptr, ""},
    {"layer", nullptr, nullptr, nullptr, nullptr, "0"},
    {"threshold_frac", nullptr, nullptr, nullptr, nullptr, "0.01"},
};

const char* default_for(const KeySpec& spec, Command c) {
  switch (c) {
    case Command::Train: return spec.train;
    case Command::Cl: return spec.cl;
    case Command::Dynamics: return spec.dynamics;
    case Command::Surface: return spec.surface;
    case Command::Sparsity: return spec.sparsity;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "train") return Command::Train;
  if (name == "cl") return Command::Cl;
  if (name == "dynamics") return Command::Dynamics;
  if (name == "surface") return Command::Surface;
  if (name == "sparsity") return Command::Sparsity;
  raise(Errc::invalid_argument,
        "unknown command '" + name + "' (expected train, cl, dynamics, surface or sparsity)");
}

const char* command_name(Command c) {
  switch (c) {
    case Command::Train: return "train";
    case Command::Cl: return "cl";
    case Command::Dynamics: return "dynamics";
    case Command::Surface: return "surface";
    case Command::Sparsity: return "sparsity";
  }
  return "?";
}

ExperimentConfig::ExperimentConfig(Command command) : command_(command) {
  for (const KeySpec& spec : kKeys) {
    if (const char* def = default_for(spec, command)) {
      values_[spec.name] = def;
    }
  }
  // Environment only supplies the default data directory.
  if (values_.count("data_dir") && values_["data_dir"].empty()) {
    if (const char* env = std::getenv("FFLEARN_DATA_DIR")) values_["data_dir"] = env;
    if (values_["data_dir"].empty()) values_["data_dir"] = "data";
  }
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) {
    std::string valid;
    for (const auto& [name, v] : values_) {
      if (!valid.empty()) valid += ", ";
      valid += name;
    }
    raise(Errc::unknown_key, "unknown config key '" + key + "' for command '" +
                                 command_name(command_) + "'; valid keys: " + valid);
  }
  values_[key] = value;
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::missing_file, "config: cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      raise(Errc::bad_format, "config: line " + std::to_string(lineno) + " of " + path +
                                  " is not 'key = value'");
    }
    set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

bool ExperimentConfig::has_key(const std::string& key) const {
  return values_.count(key) != 0;
}

std::string ExperimentConfig::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    raise(Errc::unknown_key, "config key '" + key + "' not available for command '" +
                                 std::string(command_name(command_)) + "'");
  }
  return it->second;
}

double ExperimentConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t used = 0;
    const double parsed = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return parsed;
  } catch (const std::exception&) {
    raise(Errc::invalid_argument, "config: key '" + key + "' = '" + v + "' is not a number");
  }
}

std::int64_t ExperimentConfig::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t used = 0;
    const long long parsed = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return parsed;
  } catch (const std::exception&) {
    raise(Errc::invalid_argument,
          "config: key '" + key + "' = '" + v + "' is not an integer");
  }
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  raise(Errc::invalid_argument, "config: key '" + key + "' = '" + v + "' is not a boolean");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved() const {
  return {values_.begin(), values_.end()};
}

std::string ExperimentConfig::echo_text() const {
  std::ostringstream out;
  out << "command = " << command_name(command_) << "\n";
  for (const auto& [key, value] : values_) {
    out << key << " = " << value << "\n";
  }
  return out.str();
}

namespace {

std::string resolve_idx_file(const std::string& dir, const std::string& base) {
  namespace fs = std::filesystem;
  const std::string plain = dir + "/" + base;
  if (fs::exists(plain)) return plain;
  const std::string gz = plain + ".gz";
  if (fs::exists(gz)) return gz;
  raise(Errc::missing_file,
        "dataset file not found: tried '" + plain + "' and '" + gz + "'");
}

}  // namespace

DataPaths resolve_data_paths(const ExperimentConfig& cfg, bool need_train) {
  DataPaths paths;
  const std::string root = cfg.get_string("data_dir") + "/" + cfg.get_string("dataset");
  if (need_train) {
    paths.train_images = !cfg.get_string("train_images").empty()
                             ? cfg.get_string("train_images")
                             : resolve_idx_file(root, "train-images-idx3-ubyte");
    paths.train_labels = !cfg.get_string("train_labels").empty()
                             ? cfg.get_string("train_labels")
                             : resolve_idx_file(root, "train-labels-idx1-ubyte");
  }
  paths.test_images = !cfg.get_string("test_images").empty()
                          ? cfg.get_string("test_images")
                          : resolve_idx_file(root, "t10k-images-idx3-ubyte");
  paths.test_labels = !cfg.get_string("test_labels").empty()
                          ? cfg.get_string("test_labels")
                          : resolve_idx_file(root, "t10k-labels-idx1-ubyte");
  return paths;
}

}  // namespace ff

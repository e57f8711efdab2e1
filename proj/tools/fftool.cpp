// fftool — experiment runner for the fflearn library.
//
//   fftool <command> [--config FILE] [--KEY VALUE]...
//
// Commands: train, cl, dynamics, surface, sparsity. Every --KEY VALUE pair
// overrides the config file and the built-in defaults; unknown keys abort
// with the list of valid ones. All outputs (CSV files, checkpoint, resolved
// config echo) land in the directory named by --out.

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "fflearn/fflearn.h"

namespace {

int usage(std::FILE* to) {
  std::fprintf(to,
               "usage: fftool <command> [--config FILE] [--KEY VALUE]...\n"
               "\n"
               "commands:\n"
               "  train      train one model; writes train_log.csv + checkpoint.ffnet\n"
               "  cl         run a continual-learning stream over repeated seeds;\n"
               "             writes per-seed accuracy matrices, metrics.csv, summary.csv\n"
               "  dynamics   closed-form single-layer activity simulation -> dynamics.csv\n"
               "  surface    goodness-probability grid -> surface.csv\n"
               "  sparsity   latent sparsity of a checkpoint -> sparsity.csv,\n"
               "             active_hist.csv, activity_map.csv\n"
               "\n"
               "common keys: --out DIR --seed N --data_dir DIR --dataset NAME\n"
               "             --algorithm ffa|sffa|backprop --width N --hidden_layers N\n"
               "run 'fftool <command> --help-keys' to list every key of a command.\n");
  return to == stdout ? 0 : 2;
}

int fail(const char* what) {
  std::fprintf(stderr, "fftool: %s: %s\n", what, ffl_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage(stderr);
  const std::string command = argv[1];
  if (command == "--help" || command == "-h" || command == "help") return usage(stdout);

  ffl_config* cfg = ffl_config_new(command.c_str());
  if (!cfg) {
    std::fprintf(stderr, "fftool: %s\n", ffl_last_error());
    return 2;
  }

  for (int i = 2; i < argc; ++i) {
    const char* arg = argv[i];
    if (std::strcmp(arg, "--help-keys") == 0) {
      // Probe with an impossible key: the error message enumerates the rest.
      ffl_config_set(cfg, "?", "?");
      std::fprintf(stdout, "%s\n", ffl_last_error());
      ffl_config_free(cfg);
      return 0;
    }
    if (std::strncmp(arg, "--", 2) != 0 || i + 1 >= argc) {
      std::fprintf(stderr, "fftool: expected --KEY VALUE pairs, got '%s'\n", arg);
      ffl_config_free(cfg);
      return 2;
    }
    const std::string key = arg + 2;
    const char* value = argv[++i];
    if (key == "config") {
      if (ffl_config_load_file(cfg, value) != FFL_OK) {
        const int rc = fail("config");
        ffl_config_free(cfg);
        return rc;
      }
      continue;
    }
    if (ffl_config_set(cfg, key.c_str(), value) != FFL_OK) {
      const int rc = fail("config");
      ffl_config_free(cfg);
      return rc;
    }
  }

  const ffl_status rc = ffl_run(cfg);
  if (rc != FFL_OK) {
    const int code = fail(command.c_str());
    ffl_config_free(cfg);
    return code;
  }
  char out[512];
  ffl_config_get(cfg, "out", out, sizeof(out));
  std::fprintf(stderr, "fftool: %s complete; outputs in %s\n", command.c_str(), out);
  ffl_config_free(cfg);
  return 0;
}

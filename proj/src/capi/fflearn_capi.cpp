#include "fflearn/fflearn.h"

#include <cstring>
#include <memory>
#include <string>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/experiments.hpp"

namespace {

thread_local std::string g_last_error;

ffl_status status_of(ff::Errc code) {
  switch (code) {
    case ff::Errc::dimension_mismatch: return FFL_ERR_DIMENSION;
    case ff::Errc::bad_format: return FFL_ERR_FORMAT;
    case ff::Errc::truncated: return FFL_ERR_FORMAT;
    case ff::Errc::invalid_argument: return FFL_ERR_INVALID_ARGUMENT;
    case ff::Errc::numeric_failure: return FFL_ERR_NUMERIC;
    case ff::Errc::unstable_step: return FFL_ERR_UNSTABLE;
    case ff::Errc::io_failure: return FFL_ERR_IO;
    case ff::Errc::unknown_key: return FFL_ERR_CONFIG;
    case ff::Errc::missing_file: return FFL_ERR_IO;
    case ff::Errc::incompatible: return FFL_ERR_INVALID_ARGUMENT;
  }
  return FFL_ERR_INTERNAL;
}

template <typename Fn>
ffl_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FFL_OK;
  } catch (const ff::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FFL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return FFL_ERR_INTERNAL;
  }
}

}  // namespace

struct ffl_config {
  ff::ExperimentConfig impl;
};

struct ffl_network {
  // Exactly one of the two models is loaded.
  std::unique_ptr<ff::LoadedFf> forward_only;
  std::unique_ptr<ff::Mlp> backprop;
};

extern "C" {

const char* ffl_version(void) { return "1.0.0"; }

const char* ffl_last_error(void) { return g_last_error.c_str(); }

ffl_config* ffl_config_new(const char* command) {
  if (!command) {
    g_last_error = "command must not be null";
    return nullptr;
  }
  try {
    auto* cfg = new ffl_config{ff::ExperimentConfig(ff::parse_command(command))};
    g_last_error.clear();
    return cfg;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return nullptr;
  }
}

void ffl_config_free(ffl_config* cfg) { delete cfg; }

ffl_status ffl_config_set(ffl_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) {
    g_last_error = "null argument";
    return FFL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { cfg->impl.set(key, value); });
}

ffl_status ffl_config_load_file(ffl_config* cfg, const char* path) {
  if (!cfg || !path) {
    g_last_error = "null argument";
    return FFL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { cfg->impl.load_file(path); });
}

ffl_status ffl_config_get(const ffl_config* cfg, const char* key, char* buf, size_t buflen) {
  if (!cfg || !key || !buf || buflen == 0) {
    g_last_error = "null argument";
    return FFL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const std::string value = cfg->impl.get_string(key);
    const size_t n = value.size() < buflen - 1 ? value.size() : buflen - 1;
    std::memcpy(buf, value.data(), n);
    buf[n] = '\0';
  });
}

ffl_status ffl_run(const ffl_config* cfg) {
  if (!cfg) {
    g_last_error = "null config";
    return FFL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { ff::run_command(cfg->impl); });
}

ffl_status ffl_network_open(const char* checkpoint_path, ffl_network** net) {
  if (!checkpoint_path || !net) {
    g_last_error = "null argument";
    return FFL_ERR_INVALID_ARGUMENT;
  }
  *net = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<ffl_network>();
    if (ff::peek_checkpoint_kind(checkpoint_path) == ff::CheckpointKind::Backprop) {
      handle->backprop =
          std::make_unique<ff::Mlp>(ff::load_mlp_checkpoint(checkpoint_path));
    } else {
      handle->forward_only =
          std::make_unique<ff::LoadedFf>(ff::load_ff_checkpoint(checkpoint_path));
    }
    *net = handle.release();
  });
}

void ffl_network_close(ffl_network* net) { delete net; }

ffl_status ffl_network_num_classes(const ffl_network* net, size_t* classes) {
  if (!net || !classes) {
    g_last_error = "null argument";
    return FFL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *classes = net->forward_only ? net->forward_only->book.size()
                                 : net->backprop->head_classes(0);
  });
}

ffl_status ffl_network_predict(const ffl_network* net, const double* pixels,
                               size_t pixel_count, int* predicted_label, double* scores,
                               size_t scores_len) {
  if (!net || !pixels || !predicted_label) {
    g_last_error = "null argument";
    return FFL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const std::span<const double> image(pixels, pixel_count);
    if (net->forward_only) {
      const std::vector<int> labels = net->forward_only->book.labels();
      const ff::Prediction pred =
          net->forward_only->net.predict(image, net->forward_only->book, labels);
      *predicted_label = pred.label;
      if (scores) {
        for (size_t i = 0; i < pred.goodness.size() && i < scores_len; ++i) {
          scores[i] = pred.goodness[i];
        }
      }
    } else {
      const std::vector<double> logits = net->backprop->forward_logits(image, 0);
      int best = 0;
      for (size_t c = 1; c < logits.size(); ++c) {
        if (logits[c] > logits[best]) best = static_cast<int>(c);
      }
      *predicted_label = best;
      if (scores) {
        for (size_t i = 0; i < logits.size() && i < scores_len; ++i) scores[i] = logits[i];
      }
    }
  });
}

}  // extern "C"

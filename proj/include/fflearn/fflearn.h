/*
 * fflearn — forward-only neural-network learning toolkit.
 *
 * C interface over the training core: experiment configs, the five command
 * runners (train, cl, dynamics, surface, sparsity) and checkpoint-backed
 * prediction. All functions return ffl_status; the per-thread message from
 * ffl_last_error() describes the most recent failure in detail. Handles are
 * opaque and must be released with their matching free/close call.
 */
#ifndef FFLEARN_H
#define FFLEARN_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FFLEARN_API __declspec(dllexport)
#else
#define FFLEARN_API __attribute__((visibility("default")))
#endif

typedef enum ffl_status {
  FFL_OK = 0,
  FFL_ERR_INVALID_ARGUMENT = 1, /* bad parameter or config value */
  FFL_ERR_DIMENSION = 2,        /* shape mismatch */
  FFL_ERR_FORMAT = 3,           /* malformed file or stream */
  FFL_ERR_IO = 4,               /* missing file or failed write */
  FFL_ERR_NUMERIC = 5,          /* non-finite values during computation */
  FFL_ERR_UNSTABLE = 6,         /* refused update under stability preconditions */
  FFL_ERR_CONFIG = 7,           /* unknown config key */
  FFL_ERR_INTERNAL = 8
} ffl_status;

typedef struct ffl_config ffl_config;
typedef struct ffl_network ffl_network;

FFLEARN_API const char* ffl_version(void);

/* Message describing this thread's most recent failure; empty on success. */
FFLEARN_API const char* ffl_last_error(void);

/* Config for one command: "train", "cl", "dynamics", "surface", "sparsity".
 * Keys start at their documented defaults; NULL on unknown command. */
FFLEARN_API ffl_config* ffl_config_new(const char* command);
FFLEARN_API void ffl_config_free(ffl_config* cfg);

/* Sets one key; unknown keys fail with FFL_ERR_CONFIG. */
FFLEARN_API ffl_status ffl_config_set(ffl_config* cfg, const char* key, const char* value);

/* Loads 'key = value' lines ('#' comments allowed). */
FFLEARN_API ffl_status ffl_config_load_file(ffl_config* cfg, const char* path);

/* Copies the resolved value of a key into buf (NUL terminated, truncating). */
FFLEARN_API ffl_status ffl_config_get(const ffl_config* cfg, const char* key, char* buf,
                                      size_t buflen);

/* Runs the config's command; outputs land under the config's `out` dir. */
FFLEARN_API ffl_status ffl_run(const ffl_config* cfg);

/* Opens a checkpoint (forward-forward or backprop) for prediction. */
FFLEARN_API ffl_status ffl_network_open(const char* checkpoint_path, ffl_network** net);
FFLEARN_API void ffl_network_close(ffl_network* net);

/* Number of scorable classes (registered labels / head width). */
FFLEARN_API ffl_status ffl_network_num_classes(const ffl_network* net, size_t* classes);

/* Scores one flattened image in [0,1]. predicted_label receives the argmax
 * class; scores (optional, length scores_len >= num_classes) receives the
 * per-class goodness (forward-forward) or logits (backprop). */
FFLEARN_API ffl_status ffl_network_predict(const ffl_network* net, const double* pixels,
                                           size_t pixel_count, int* predicted_label,
                                           double* scores, size_t scores_len);

#ifdef __cplusplus
}
#endif

#endif /* FFLEARN_H */

/* C interface to the patch-based lesion classification library.
 *
 * All entry points return pla_status; on failure pla_last_error() gives a
 * thread-local human-readable message. Handles are opaque and must be
 * released with their destroy function.
 */
#ifndef PATCHLESION_H
#define PATCHLESION_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pla_status {
  PLA_OK = 0,
  PLA_ERR_CONFIG = 1,
  PLA_ERR_IO = 2,
  PLA_ERR_SHAPE = 3,
  PLA_ERR_RUNTIME = 4,
} pla_status;

/* Key=value experiment configuration with documented defaults. Unknown
 * keys are rejected. */
typedef struct pla_config pla_config;

pla_config* pla_config_create(void);
void pla_config_destroy(pla_config* cfg);

/* Merges `key = value` lines from a file; '#' starts a comment. */
pla_status pla_config_load_file(pla_config* cfg, const char* path);
pla_status pla_config_set(pla_config* cfg, const char* key, const char* value);

/* Copies the current value into buf (NUL-terminated, truncated if
 * needed). buf may be NULL to just validate the key. */
pla_status pla_config_get(const pla_config* cfg, const char* key, char* buf,
                          size_t buf_len);

/* Trains a model; writes metrics.csv, config.txt and model.ckpt under the
 * configured out_dir. */
pla_status pla_train(const pla_config* cfg);

/* Evaluates a checkpoint on the test split; writes metrics_eval.csv (and
 * attention.csv for attention models) under out_dir. */
pla_status pla_eval(const pla_config* cfg, const char* checkpoint_path);

/* Trains and evaluates once per (value, seed) along one axis
 * (k, p_d, n_crops, balancing or aggregator); writes sweep.csv. */
pla_status pla_sweep(const pla_config* cfg, const char* axis,
                     const char* const* values, size_t n_values);

/* Gradient verification against finite differences. A per-component
 * report is copied into `report` when non-NULL; *out_failures (when
 * non-NULL) receives the number of failing components. */
pla_status pla_gradcheck(const pla_config* cfg, char* report,
                         size_t report_len, int* out_failures);

/* Generates a synthetic dataset (images plus manifest.csv) under out_dir.
 * The class histogram is copied into `report` when non-NULL. */
pla_status pla_gen_synth(const pla_config* cfg, char* report,
                         size_t report_len);

/* Message for the most recent failure on this thread; never NULL. */
const char* pla_last_error(void);

const char* pla_version(void);

#ifdef __cplusplus
}
#endif

#endif /* PATCHLESION_H */

/* C interface to the tumorsynth toolkit.
 *
 * Every fallible call returns a ts_status; on failure ts_last_error() holds a
 * message for the calling thread until its next failing call. Handles are
 * opaque and owned by the caller, who releases them with the matching _free
 * function (all _free functions accept NULL). Strings returned through char**
 * are released with ts_string_free. */
#ifndef TUMORSYNTH_H
#define TUMORSYNTH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef TS_BUILDING_LIBRARY
#    define TS_API __declspec(dllexport)
#  else
#    define TS_API __declspec(dllimport)
#  endif
#else
#  define TS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ts_status {
  TS_OK = 0,
  TS_ERR_INVALID_ARGUMENT = 1,
  TS_ERR_IO = 2,
  TS_ERR_GEOMETRY = 3,
  TS_ERR_INFEASIBLE = 4,
  TS_ERR_STATE = 5,
  TS_ERR_NOT_FOUND = 6,
  TS_ERR_INTERNAL = 7
} ts_status;

TS_API const char* ts_last_error(void);
TS_API const char* ts_status_name(ts_status status);
TS_API const char* ts_version(void);
TS_API void ts_string_free(char* s);

/* Volumes: CT images (float HU) or binary masks. Data is x-fastest. */
typedef struct ts_volume ts_volume;

TS_API ts_status ts_volume_load(const char* path, ts_volume** out);
TS_API ts_status ts_mask_load(const char* path, ts_volume** out);
/* Identity direction, zero origin. For masks, values > 0.5 become 1. */
TS_API ts_status ts_volume_create(const size_t dims[3], const double spacing[3], const float* data, int is_mask,
                                  ts_volume** out);
/* Masks are written as uint8, images as float32. */
TS_API ts_status ts_volume_save(const ts_volume* v, const char* path);
TS_API ts_status ts_volume_dims(const ts_volume* v, size_t dims[3]);
TS_API ts_status ts_volume_spacing(const ts_volume* v, double spacing[3]);
/* Copies dims[0]*dims[1]*dims[2] values; `count` must be at least that. */
TS_API ts_status ts_volume_copy_data(const ts_volume* v, float* out, size_t count);
TS_API int ts_volume_is_mask(const ts_volume* v);
TS_API void ts_volume_free(ts_volume* v);

/* Synthesis configuration (JSON document, see README). */
typedef struct ts_config ts_config;

TS_API ts_status ts_config_default(ts_config** out);
TS_API ts_status ts_config_load(const char* path, ts_config** out);
TS_API ts_status ts_config_parse(const char* json, ts_config** out);
TS_API ts_status ts_config_set_seed(ts_config* cfg, uint64_t master_seed);
TS_API ts_status ts_config_to_json(const ts_config* cfg, char** out);
TS_API void ts_config_free(ts_config* cfg);

/* One synthesized case. */
typedef struct ts_case ts_case;

TS_API ts_status ts_case_seed(uint64_t master_seed, const char* case_name, uint64_t* out);
TS_API ts_status ts_synthesize_case(const ts_volume* ct, const ts_volume* liver, const ts_config* cfg,
                                    uint64_t case_seed, ts_case** out);
/* Returns new handles holding copies. */
TS_API ts_status ts_case_image(const ts_case* c, ts_volume** out);
TS_API ts_status ts_case_label(const ts_case* c, ts_volume** out);
TS_API size_t ts_case_tumor_count(const ts_case* c);
/* {"seed":..., "planned":..., "tumors":[...], "warnings":[...]} */
TS_API ts_status ts_case_specs_json(const ts_case* c, char** out);
TS_API ts_status ts_case_write_preview(const ts_case* c, const char* png_path);
TS_API void ts_case_free(ts_case* c);

typedef struct ts_dataset_summary {
  size_t total;
  size_t succeeded;
  size_t failed;
  size_t tumors;
} ts_dataset_summary;

/* <inputs>/<case>/{ct,liver}.nii[.gz] -> <out>/<case>/{image,label}.nii.gz
 * plus <out>/manifest.jsonl. Per-case failures are counted in the summary and
 * recorded in the manifest; the call fails with TS_ERR_STATE only when every
 * case failed. `summary` may be NULL. */
TS_API ts_status ts_generate_dataset(const char* inputs, const char* out, const ts_config* cfg, unsigned jobs,
                                     ts_dataset_summary* summary);

/* Synthesizes the case directory `case_dir` with the case seed generate would
 * use for it under `cfg`'s master seed, and writes an orthogonal-slice PNG. */
TS_API ts_status ts_preview(const char* case_dir, const ts_config* cfg, const char* png_path);

/* Metrics on co-registered masks. */
TS_API ts_status ts_dsc(const ts_volume* pred, const ts_volume* gt, double* out);
TS_API ts_status ts_nsd(const ts_volume* pred, const ts_volume* gt, double tolerance_mm, double* out);

typedef struct ts_eval_summary {
  size_t cases;
  size_t unmatched;
  double mean_dsc;
  double dsc_ci_lo;
  double dsc_ci_hi;
  double mean_nsd;
  double nsd_ci_lo;
  double nsd_ci_hi;
} ts_eval_summary;

/* Pairs files by name; `bin_edges` may be NULL for the defaults {5,10,20,30}.
 * Writes CSV and SVG reports into `out_dir` when it is non-NULL. `report_json`
 * (optional) receives the full report including unmatched file names. */
TS_API ts_status ts_evaluate(const char* pred_dir, const char* gt_dir, double tolerance_mm, const double* bin_edges,
                             size_t n_edges, const char* out_dir, ts_eval_summary* summary, char** report_json);

/* Visual Turing test HTTP service. */
typedef struct ts_turing_server ts_turing_server;

typedef struct ts_turing_options {
  const char* real_dir;
  const char* synthetic_dir;
  uint64_t seed;
  const char* host;        /* NULL = 127.0.0.1 */
  const char* static_dir;  /* NULL = no UI bundle */
  const char* event_log;   /* NULL = sessions kept in memory only */
  int allow_partial_score;
} ts_turing_options;

TS_API void ts_turing_options_init(ts_turing_options* opts);
TS_API ts_status ts_turing_server_create(const ts_turing_options* opts, ts_turing_server** out);
/* port 0 picks a free port; the bound port is stored in *bound_port. */
TS_API ts_status ts_turing_server_bind(ts_turing_server* s, int port, int* bound_port);
/* Blocks until ts_turing_server_stop is called from another thread. */
TS_API ts_status ts_turing_server_run(ts_turing_server* s);
TS_API ts_status ts_turing_server_stop(ts_turing_server* s);
TS_API void ts_turing_server_free(ts_turing_server* s);

/* Writes `n` synthetic abdomen cases (<dir>/caseNN/{ct,liver}.nii.gz).
 * dims/spacing may be NULL for 96x96x64 at 1.5 mm. */
TS_API ts_status ts_write_toy_dataset(const char* dir, size_t n, uint64_t seed, const size_t dims[3],
                                      const double spacing[3]);

#ifdef __cplusplus
}
#endif

#endif

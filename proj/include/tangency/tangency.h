/* C interface to the tangency toolkit. All functions return a tgc_status;
 * on failure tgc_last_error() describes the problem (thread-local). Strings
 * returned through char** are owned by the caller and released with
 * tgc_free_string. */
#ifndef TANGENCY_TANGENCY_H
#define TANGENCY_TANGENCY_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TGC_API __declspec(dllexport)
#else
#define TGC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tgc_status {
  TGC_OK = 0,
  TGC_INVALID_ARGUMENT = 1,
  TGC_INVALID_DIMENSION = 2,
  TGC_DIMENSION_MISMATCH = 3,
  TGC_RANK_DEFICIENT = 4,
  TGC_NO_CONVERGENCE = 5,
  TGC_OUT_OF_DOMAIN = 6,
  TGC_NOT_A_GRAPH = 7,
  TGC_SINGULAR_SYSTEM = 8,
  TGC_NO_SUCH_AUTOMORPHISM = 9,
  TGC_LEFT_DOMAIN = 10,
  TGC_EMPTY_INTERSECTION = 11,
  TGC_NOT_ELLIPTIC = 12,
  TGC_PARSE = 13,
  TGC_INTERNAL = 99
} tgc_status;

typedef struct tgc_scenario tgc_scenario;

typedef struct tgc_scenario_info {
  int d;
  int n;
  int k;
  int c_t;
  int s;
  double alpha;
  uint64_t seed;
} tgc_scenario_info;

typedef struct tgc_verify_options {
  long long cone_samples; /* default 10000 */
  int folding_grid;       /* default 21 */
  int trapping_grid;      /* default 11 */
} tgc_verify_options;

typedef enum tgc_target { TGC_TARGET_SYSTEM = 0, TGC_TARGET_FOLD = 1 } tgc_target;

typedef struct tgc_robustness_options {
  const double* ladder; /* NULL: default ladder */
  size_t ladder_len;
  int trials;
  uint64_t seed;
  int threads; /* 0: TANGENCY_THREADS or hardware concurrency */
  tgc_target target;
} tgc_robustness_options;

TGC_API const char* tgc_version(void);
TGC_API const char* tgc_last_error(void);
TGC_API const char* tgc_status_name(tgc_status status);
TGC_API void tgc_free_string(char* s);
/* 64-bit FNV-1a of the bytes as 16 hex digits plus NUL. */
TGC_API void tgc_config_hash(const char* bytes, size_t len, char out[17]);

TGC_API void tgc_verify_options_default(tgc_verify_options* opts);
TGC_API void tgc_robustness_options_default(tgc_robustness_options* opts);

/* kind may be NULL (elliptic for c_t = 1, coupled otherwise); alpha <= 0
 * selects the default aperture. */
TGC_API tgc_status tgc_scenario_build(int c_t, int s, const char* kind, double alpha,
                                      uint64_t seed, tgc_scenario** out);
TGC_API tgc_status tgc_scenario_from_json(const char* json, tgc_scenario** out);
/* header_json may be NULL; otherwise it is embedded under "header". */
TGC_API tgc_status tgc_scenario_to_json(const tgc_scenario* sc, const char* header_json,
                                        char** out_json);
TGC_API tgc_status tgc_scenario_info_get(const tgc_scenario* sc, tgc_scenario_info* out);
TGC_API void tgc_scenario_free(tgc_scenario* sc);

/* Trapping, cone and folding certificates. *all_pass is 1 iff all pass. */
TGC_API tgc_status tgc_verify(const tgc_scenario* sc, const tgc_verify_options* opts,
                              char** out_json, int* all_pass);

/* detector: "newton", "sweep" or "both". */
TGC_API tgc_status tgc_find(const tgc_scenario* sc, const char* detector, char** out_json);

TGC_API tgc_status tgc_robustness(const tgc_scenario* sc, const tgc_robustness_options* opts,
                                  char** out_csv, char** out_summary_json);

/* Frames are column-major d x dim arrays. triple = {c_T, d_T, k_T}. */
TGC_API tgc_status tgc_classify(const double* tu, int tu_dim, const double* ts, int ts_dim,
                                int d, double angle_tol, int* transverse, int triple[3]);

#ifdef __cplusplus
}
#endif

#endif /* TANGENCY_TANGENCY_H */

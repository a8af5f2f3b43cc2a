/* C interface to the streamhar engine.
 *
 * Objects are opaque handles released with their matching *_free function.
 * Every call that can fail returns a shar_status; on failure the message is
 * available from shar_last_error() on the calling thread until the next
 * failing call. Strings returned through char** are owned by the caller and
 * released with shar_string_free(). Configuration travels as JSON text.
 */
#ifndef STREAMHAR_H
#define STREAMHAR_H

#include <stddef.h>
#include <stdint.h>

#if defined(STREAMHAR_BUILDING)
#define SHAR_API __attribute__((visibility("default")))
#else
#define SHAR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum shar_status {
  SHAR_OK = 0,
  SHAR_E_INVALID_ARGUMENT = 1,
  SHAR_E_NON_FINITE_CHANNEL = 2,
  SHAR_E_LENGTH_MISMATCH = 3,
  SHAR_E_DIMENSION_MISMATCH = 4,
  SHAR_E_EMPTY_CHUNK = 5,
  SHAR_E_EMPTY_STREAM = 6,
  SHAR_E_EMPTY_SPLIT = 7,
  SHAR_E_UNKNOWN_ACTIVITY = 8,
  SHAR_E_UNKNOWN_ALGORITHM = 9,
  SHAR_E_UNKNOWN_SESSION = 10,
  SHAR_E_MALFORMED_ROW = 11,
  SHAR_E_MALFORMED_MESSAGE = 12,
  SHAR_E_IO = 13,
  SHAR_E_BIND = 14,
  SHAR_E_SNAPSHOT_FORMAT = 15,
  SHAR_E_INTERNAL = 99
} shar_status;

typedef struct shar_recording shar_recording;
typedef struct shar_learner shar_learner;
typedef struct shar_server shar_server;

SHAR_API const char* shar_version(void);
SHAR_API const char* shar_last_error(void);
SHAR_API const char* shar_status_name(int status);
SHAR_API void shar_string_free(char* s);
/* "trace", "debug", "info", "warn", "error" or "off". */
SHAR_API int shar_set_log_level(const char* level);

/* Recordings.
 *
 * scenario_json: {"scenario": "paper", "activities": 5, "seed": 1,
 * "onset_delay_s": 2.0, "jitter_samples": 0} or a full script
 * {"segments": [{"activity": ..., "duration_s": ...}], "rate_hz": ...}.
 * profiles_json may be NULL for the built-in profile set. */
SHAR_API int shar_recording_generate(const char* scenario_json, const char* profiles_json, shar_recording** out);
SHAR_API int shar_recording_load_csv(const char* path, shar_recording** out);
SHAR_API int shar_recording_save_csv(const shar_recording* rec, const char* path);
SHAR_API size_t shar_recording_size(const shar_recording* rec);
SHAR_API size_t shar_recording_label_count(const shar_recording* rec);
SHAR_API void shar_recording_free(shar_recording* rec);
/* Built-in profiles ("well-separated" or "table1") as JSON. */
SHAR_API int shar_default_profiles(const char* set, char** out_json);

/* Writes one row per window: f000..f097,label. When manifest_path is not
 * NULL the feature layout is written there as JSON. config_json keys:
 * window, rate_hz, sma_literal, autocorr_lag, normalize. */
SHAR_API int shar_extract_csv(const shar_recording* rec, const char* config_json, const char* out_path,
                              const char* manifest_path, size_t* out_windows);

/* Prequential benchmark. config_json keys: algos, seed, window, rate_hz,
 * sma_literal, learner. Writes reports under out_dir (may be NULL) and
 * returns a JSON summary. Recordings are benchmarked as given; several
 * recordings count as several subjects. */
SHAR_API int shar_bench(const shar_recording* const* recs, size_t n_recs, const uint64_t* seeds,
                        const char* config_json, const char* out_dir, char** out_summary);

/* Batch holdout vs prequential. Extra keys: epochs, test_fraction. Returns
 * {"table": ..., "csv": ..., "result": {...}}. */
SHAR_API int shar_batch_compare(const shar_recording* rec, const char* config_json, char** out_json);

/* Incremental learners over raw feature vectors. */
SHAR_API int shar_learner_create(const char* algo, const char* config_json, shar_learner** out);
SHAR_API int shar_learner_learn(shar_learner* l, const double* x, size_t dim, int label);
/* *has_prediction is 0 before the first learn. Scores are written by class
 * id up to scores_cap; *n_scores receives the class count. */
SHAR_API int shar_learner_predict(const shar_learner* l, const double* x, size_t dim, int* has_prediction,
                                  int* label, double* scores, size_t scores_cap, size_t* n_scores);
SHAR_API uint64_t shar_learner_seen(const shar_learner* l);
SHAR_API int shar_learner_save(const shar_learner* l, const char* path);
SHAR_API int shar_learner_load(const char* path, shar_learner** out);
SHAR_API void shar_learner_free(shar_learner* l);

/* Stream service. config_json keys: address, port, tcp_port, inbox,
 * threads, algos, seed, window, rate_hz, sma_literal, learner. */
SHAR_API int shar_server_create(const char* config_json, shar_server** out);
SHAR_API int shar_server_start(shar_server* s);
SHAR_API int shar_server_run(shar_server* s);
/* Safe to call from any thread or a signal-handling thread. */
SHAR_API int shar_server_stop(shar_server* s);
SHAR_API int shar_server_port(const shar_server* s);
SHAR_API int shar_server_tcp_port(const shar_server* s);
SHAR_API int shar_server_health(const shar_server* s, char** out_json);
SHAR_API void shar_server_free(shar_server* s);

/* Streams a recording to ws://host:port/stream or tcp://host:port.
 * options_json keys: algos, seed, speed, window, rate_hz. Returns every
 * received event as newline-delimited JSON. */
SHAR_API int shar_replay(const shar_recording* rec, const char* url, const char* options_json, char** out_ndjson);

#ifdef __cplusplus
}
#endif

#endif /* STREAMHAR_H */

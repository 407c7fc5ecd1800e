#ifndef PLACEVALUE_H
#define PLACEVALUE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of place columns, ones through millions.
 */
#define PV_PLACES 7

typedef enum PvStatus {
  PV_STATUS_OK = 0,
  PV_STATUS_NULL_POINTER = 1,
  PV_STATUS_INVALID_ARGUMENT = 2,
  PV_STATUS_OUT_OF_RANGE = 3,
  PV_STATUS_MALFORMED = 4,
  PV_STATUS_IO = 5,
  PV_STATUS_CORRUPT = 6,
  PV_STATUS_UNBUILDABLE = 7,
  PV_STATUS_PANIC = 99,
} PvStatus;

typedef enum PvFormat {
  PV_FORMAT_TEXT = 0,
  PV_FORMAT_CSV = 1,
} PvFormat;

/**
 * One generated question.
 */
typedef struct PvQuestion PvQuestion;

/**
 * Seeded question generator.
 */
typedef struct PvRng PvRng;

/**
 * Read-only store rebuilt from a data directory's event log.
 */
typedef struct PvStore PvStore;

typedef struct PvTTest {
  double t;
  uint32_t df;
  double p_one_tailed;
  bool significant;
} PvTTest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *pv_last_error_message(void);

/**
 * Split `n` into its digits. `out_digits[p]` receives the digit at power
 * `p` (0 for skipped places); `out_parts` the number of nonzero places.
 *
 * # Safety
 * `out_digits` must point to `PV_PLACES` writable bytes and `out_parts` to
 * a writable `size_t`.
 */
enum PvStatus pv_decompose(uint32_t n, uint8_t *out_digits, size_t *out_parts);

struct PvRng *pv_rng_new(uint64_t seed);

/**
 * # Safety
 * `rng` must come from [`pv_rng_new`] and not be used afterwards. NULL is
 * ignored.
 */
void pv_rng_free(struct PvRng *rng);

/**
 * Draw a question for the place at `power` (0 = ones .. 6 = millions).
 *
 * # Safety
 * `rng` must be a live handle and `out` a writable pointer slot.
 */
enum PvStatus pv_question_generate(struct PvRng *rng, uint32_t power, struct PvQuestion **out);

/**
 * # Safety
 * `q` must be a live question handle.
 */
uint32_t pv_question_number(const struct PvQuestion *q);

/**
 * # Safety
 * `q` must come from [`pv_question_generate`] and not be used afterwards.
 * NULL is ignored.
 */
void pv_question_free(struct PvQuestion *q);

/**
 * Check a counting answer. `clicks[p]` is the click count at power `p`;
 * places whose digit is zero must be left at 0.
 *
 * # Safety
 * `q` must be a live handle, `clicks` must point to `PV_PLACES` values and
 * `out_correct` to a writable bool.
 */
enum PvStatus pv_evaluate(const struct PvQuestion *q, const uint32_t *clicks, bool *out_correct);

/**
 * Upper-tail probability `P(T_df > t)`.
 *
 * # Safety
 * `out` must be a writable double.
 */
enum PvStatus pv_t_upper_tail(double t, uint32_t df, double *out);

/**
 * Paired t on `post - pre`.
 *
 * # Safety
 * `pre` and `post` must each hold `n` doubles; `out` must be writable.
 */
enum PvStatus pv_paired_t(const double *pre, const double *post, size_t n, struct PvTTest *out);

/**
 * Pooled-variance t on `mean(a) - mean(b)`.
 *
 * # Safety
 * `a` must hold `na` doubles, `b` `nb` doubles; `out` must be writable.
 */
enum PvStatus pv_independent_t(const double *a,
                               size_t na,
                               const double *b,
                               size_t nb,
                               struct PvTTest *out);

/**
 * Rebuild the store in `data_dir` from its event log.
 *
 * # Safety
 * `data_dir` must be a NUL-terminated UTF-8 path and `out` writable.
 */
enum PvStatus pv_store_open(const char *data_dir, struct PvStore **out);

/**
 * Number of events the store was rebuilt from.
 *
 * # Safety
 * `store` must be a live handle.
 */
uint64_t pv_store_event_count(const struct PvStore *store);

/**
 * Render table `table` (1..6) in `format`, a [`PvFormat`] value. The
 * returned string must be released with [`pv_string_free`].
 *
 * # Safety
 * `store` must be a live handle and `out` writable.
 */
enum PvStatus pv_store_export_table(const struct PvStore *store,
                                    uint8_t table,
                                    uint32_t format,
                                    char **out);

/**
 * # Safety
 * `store` must come from [`pv_store_open`] and not be used afterwards.
 * NULL is ignored.
 */
void pv_store_free(struct PvStore *store);

/**
 * # Safety
 * `s` must be a string returned by this library, or NULL.
 */
void pv_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLACEVALUE_H */

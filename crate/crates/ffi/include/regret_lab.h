#ifndef REGRET_LAB_H
#define REGRET_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every function.
 */
typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_ARGUMENT = 2,
  RL_STATUS_PARSE = 3,
  RL_STATUS_OUT_OF_RANGE = 4,
  RL_STATUS_CAPACITY = 5,
  RL_STATUS_NO_CONVERGENCE = 6,
  RL_STATUS_INTERNAL = 7,
} RlStatus;

typedef enum RlEnv {
  RL_ENV_CORNER = 0,
  RL_ENV_DISH = 1,
  RL_ENV_KEYS = 2,
} RlEnv;

/**
 * Level classes as reported by [`rl_levels_classify`].
 */
typedef enum RlClass {
  RL_CLASS_NON_DISTINGUISHING = 0,
  RL_CLASS_DISTINGUISHING = 1,
  RL_CLASS_UNCLASSIFIED = 2,
} RlClass;

/**
 * An owned, immutable list of levels.
 */
typedef struct RlLevelSet RlLevelSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *rl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rl_version(void);

/**
 * Sample `count` levels of one class. `seed` fixes the output exactly.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum RlStatus rl_levels_generate(enum RlEnv env,
                                 bool distinguishing,
                                 size_t count,
                                 uint64_t seed,
                                 struct RlLevelSet **out);

/**
 * Parse a level file.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be writable.
 */
enum RlStatus rl_levels_parse(const char *text, struct RlLevelSet **out);

/**
 * # Safety
 * `set` must be null or a handle from this library not yet freed.
 */
void rl_levels_free(struct RlLevelSet *set);

/**
 * Number of levels, or 0 for a null handle.
 *
 * # Safety
 * `set` must be null or a live handle.
 */
size_t rl_levels_len(const struct RlLevelSet *set);

/**
 * Serialize the set in the level file format. Free the result with [`rl_string_free`].
 *
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
enum RlStatus rl_levels_format(const struct RlLevelSet *set, char **out);

/**
 * Exact maximum discounted true-goal return of one level.
 *
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
enum RlStatus rl_levels_max_return(const struct RlLevelSet *set,
                                   size_t index,
                                   double gamma,
                                   double *out);

/**
 * Classify one level as distinguishing or not.
 *
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
enum RlStatus rl_levels_classify(const struct RlLevelSet *set, size_t index, enum RlClass *out);

/**
 * Run theory suites and return the JSON report. `suites` is a comma list or
 * `"all"`. `passed` is set to whether every instance passed.
 *
 * # Safety
 * `suites` must be NUL-terminated; `out` and `passed` must be writable.
 */
enum RlStatus rl_theory_report(const char *suites,
                               size_t instances,
                               uint64_t seed,
                               char **out,
                               bool *passed);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void rl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REGRET_LAB_H */

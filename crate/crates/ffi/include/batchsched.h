/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef BATCHSCHED_H
#define BATCHSCHED_H



#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum BsStatus {
  BS_STATUS_OK = 0,
  // A required pointer argument was null.
  BS_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  BS_STATUS_INVALID_UTF8 = 2,
  // JSON input could not be parsed.
  BS_STATUS_PARSE_ERROR = 3,
  // The instance data violates a model constraint.
  BS_STATUS_INVALID_INSTANCE = 4,
  // The schedule does not fit the instance.
  BS_STATUS_INFEASIBLE_SCHEDULE = 5,
  // A numeric argument is out of range.
  BS_STATUS_INVALID_ARGUMENT = 6,
  // The library panicked; the message holds the panic payload.
  BS_STATUS_PANIC = 7,
} BsStatus;

typedef enum BsMethod {
  BS_METHOD_ILS = 0,
  BS_METHOD_GRASP = 1,
} BsMethod;

// Opaque instance handle.
typedef struct BsInstance BsInstance;

// Opaque schedule handle.
typedef struct BsSchedule BsSchedule;

// Search parameters. Obtain defaults from [`bs_params_default`].
//
// Time limits `<= 0` and a node limit of `0` mean "no limit".
typedef struct BsParams {
  double rho;
  double phi;
  double omega;
  double delta;
  double rcl_alpha;
  uint32_t omega_max;
  // Seconds per sub-solve.
  double sub_time_limit;
  // Branch-and-bound nodes per sub-solve.
  uint64_t sub_node_limit;
  // Seconds for the whole run.
  double time_limit;
  // Drop every clock limit so results depend only on the seed.
  bool deterministic;
} BsParams;

// Instance generator settings. Obtain defaults from [`bs_gen_params_default`].
typedef struct BsGenParams {
  size_t num_ops;
  size_t num_machines;
  double release_factor;
  double eligibility_factor;
  double job_assoc_factor;
  uint64_t seed;
} BsGenParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a
// successful one. The pointer stays valid until the next fallible call on
// the same thread.
const char *bs_last_error_message(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void bs_string_free(char *s);

struct BsParams bs_params_default(void);

struct BsGenParams bs_gen_params_default(size_t num_ops, size_t num_machines, uint64_t seed);

// Parses an instance from its JSON document.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum BsStatus bs_instance_from_json(const char *json, struct BsInstance **out);

// Generates a random instance.
//
// # Safety
// `params` must point to a valid struct; `out` must be writable.
enum BsStatus bs_instance_generate(const struct BsGenParams *params, struct BsInstance **out);

// Serializes an instance; release the result with [`bs_string_free`].
//
// # Safety
// `inst` must be a live handle; `out` must be writable.
enum BsStatus bs_instance_to_json(const struct BsInstance *inst, char **out);

// Number of operations, or 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
size_t bs_instance_num_ops(const struct BsInstance *inst);

// Number of jobs, or 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
size_t bs_instance_num_jobs(const struct BsInstance *inst);

// Number of machines, or 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
size_t bs_instance_num_machines(const struct BsInstance *inst);

// # Safety
// `inst` must be null or a handle not yet freed.
void bs_instance_free(struct BsInstance *inst);

// Builds the greedy constructive schedule.
//
// # Safety
// `inst` must be a live handle; `out` must be writable.
enum BsStatus bs_schedule_construct(const struct BsInstance *inst, struct BsSchedule **out);

// Parses a schedule and checks it against `inst`.
//
// # Safety
// `inst` must be a live handle, `json` a NUL-terminated string and `out`
// writable.
enum BsStatus bs_schedule_from_json(const struct BsInstance *inst,
                                    const char *json,
                                    struct BsSchedule **out);

// Serializes a schedule; release the result with [`bs_string_free`].
//
// # Safety
// `sched` must be a live handle; `out` must be writable.
enum BsStatus bs_schedule_to_json(const struct BsSchedule *sched, char **out);

// Total weighted completion time of `sched`. When `job_completion` is
// not null, the first `len` job completion times are written there too.
//
// # Safety
// Handles must be live; `out_twct` writable; `job_completion` null or
// valid for `len` writes.
enum BsStatus bs_schedule_evaluate(const struct BsInstance *inst,
                                   const struct BsSchedule *sched,
                                   int64_t *out_twct,
                                   int64_t *job_completion,
                                   size_t len);

// # Safety
// `sched` must be null or a handle not yet freed.
void bs_schedule_free(struct BsSchedule *sched);

// Runs a matheuristic (`variant` 1, 2 or 3) and returns the best schedule
// found. `params` may be null for the defaults; `out_twct` may be null.
//
// # Safety
// `inst` must be a live handle, `params` null or valid, `out_sched`
// writable and `out_twct` null or writable.
enum BsStatus bs_solve(const struct BsInstance *inst,
                       enum BsMethod method,
                       uint32_t variant,
                       const struct BsParams *params,
                       uint64_t seed,
                       struct BsSchedule **out_sched,
                       int64_t *out_twct);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BATCHSCHED_H */

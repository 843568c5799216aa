/* C interface of the specgap spectral-gap laboratory.
 *
 * Committed copy; regenerated by cbindgen when the CLI is present on the
 * build host. All strings are UTF-8 and NUL-terminated.
 */

#ifndef SPECGAP_H
#define SPECGAP_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define SPECGAP_OK 0
#define SPECGAP_ERR_CONFIG 1
#define SPECGAP_ERR_HYPOTHESIS 2
#define SPECGAP_VERIFY_FAILED 3
#define SPECGAP_ERR_RUNTIME 4
#define SPECGAP_ERR_NULL 5
#define SPECGAP_ERR_PANIC 6

/* Opaque run handle. */
typedef struct SpecgapRun SpecgapRun;

/* Last error message of the calling thread; empty when no error occurred.
 * Valid until the next failing call on this thread. */
const char *specgap_last_error(void);

/* Parses a RunConfig JSON document into a new handle. */
int specgap_run_new_from_json(const char *json, SpecgapRun **out);

/* Executes the run. Returns SPECGAP_VERIFY_FAILED when a verify run
 * produced fail verdicts; the payload is still available in that case. */
int specgap_run_execute(SpecgapRun *run);

/* Output text of an executed run; NULL before execution. Owned by the
 * handle, valid until the next execute or free. */
const char *specgap_run_payload(const SpecgapRun *run);

/* Resolved configuration as pretty JSON; re-running it reproduces the
 * payload bit-exactly. Owned by the handle. */
const char *specgap_run_config_json(const SpecgapRun *run);

/* Number of fail verdicts of the last verify execution. */
uint64_t specgap_run_failures(const SpecgapRun *run);

/* Releases a handle; NULL is ignored. */
void specgap_run_free(SpecgapRun *run);

#ifdef __cplusplus
}
#endif

#endif /* SPECGAP_H */

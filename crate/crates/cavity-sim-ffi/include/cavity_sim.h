/*
 * C interface of cavity-sim: a deterministic simulator of a laser-driven
 * two-level atom in a lossy cavity.
 *
 * This header is maintained by hand and kept in lockstep with
 * crates/cavity-sim-ffi/src/lib.rs by a test in that crate; change both
 * together. Prototypes are one line each on purpose (the test scans lines).
 *
 * Usage sketch:
 *
 *     CavitySimRun *run = NULL;
 *     if (cavity_sim_run_from_toml("t_end = 5.0", &run) != CAVITY_SIM_STATUS_OK) {
 *         fprintf(stderr, "%s\n", cavity_sim_last_error_message());
 *         return 1;
 *     }
 *     size_t n = cavity_sim_run_row_count(run);
 *     for (size_t i = 0; i < n; i++) {
 *         CavitySimRow row;
 *         cavity_sim_run_row(run, i, &row);
 *         printf("%g %g\n", row.t, row.concurrence);
 *     }
 *     cavity_sim_run_free(run);
 *
 * Thread safety: any function may be called from any thread, but a single
 * run handle must not be used from two threads at once. Error messages are
 * per thread and valid until the next cavity_sim call on that thread.
 */

#ifndef CAVITY_SIM_H
#define CAVITY_SIM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status of every fallible call. The values are frozen ABI. */
typedef enum CavitySimStatus {
    CAVITY_SIM_STATUS_OK = 0,
    CAVITY_SIM_STATUS_NULL_POINTER = 1,
    CAVITY_SIM_STATUS_INVALID_CONFIG = 2,
    CAVITY_SIM_STATUS_NUMERICAL_FAILURE = 3,
    CAVITY_SIM_STATUS_IO = 4,
    CAVITY_SIM_STATUS_INVALID_UTF8 = 5,
    CAVITY_SIM_STATUS_OUT_OF_RANGE = 6,
    CAVITY_SIM_STATUS_INTERNAL = 7,
} CavitySimStatus;

/*
 * One output sample. Amplitudes are split into real/imaginary parts; for a
 * frozen-atom ("nrw") run the cross amplitudes c12/c21 are zero and
 * has_motion is 0, with x and p reading 0.
 */
typedef struct CavitySimRow {
    double t;
    double re_c11;
    double im_c11;
    double re_c12;
    double im_c12;
    double re_c21;
    double im_c21;
    double re_c22;
    double im_c22;
    double norm;
    double concurrence;
    double trace_distance;
    double x;
    double p;
    uint8_t has_motion;
} CavitySimRow;

/* Opaque handle to a completed run: parsed config plus trajectory. */
typedef struct CavitySimRun CavitySimRun;

/*
 * Parse a TOML run configuration (same keys as the CLI's config files),
 * integrate it, and store a new handle in *out_run. On failure *out_run is
 * NULL and the returned status tells why.
 */
CavitySimStatus cavity_sim_run_from_toml(const char *config_toml, CavitySimRun **out_run);

/* Number of sampled rows; 0 if run is NULL. */
size_t cavity_sim_run_row_count(const CavitySimRun *run);

/* Copy row `index` (0-based) into *out_row. */
CavitySimStatus cavity_sim_run_row(const CavitySimRun *run, size_t index, CavitySimRow *out_row);

/*
 * Write the run's CSV and meta files (plus an SVG preview if the config set
 * emit_svg) into the directory out_dir, named after the config's `name`.
 */
CavitySimStatus cavity_sim_run_write_outputs(const CavitySimRun *run, const char *out_dir);

/* Release a handle. NULL is accepted and ignored. */
void cavity_sim_run_free(CavitySimRun *run);

/*
 * Explanation of this thread's most recent failure, or an empty string if
 * the last call succeeded. Owned by the library; do not free.
 */
const char *cavity_sim_last_error_message(void);

/* Library version, e.g. "0.1.0". Static storage; do not free. */
const char *cavity_sim_version(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CAVITY_SIM_H */

#ifndef PULSATILE_LOOP_H
#define PULSATILE_LOOP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every function.
 */
typedef enum PlStatus {
  PlStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  PlStatus_NullPointer = 1,
  /**
   * Malformed configuration or invalid parameter.
   */
  PlStatus_Config = 2,
  /**
   * Outside the dispersive regime, or not a slender channel.
   */
  PlStatus_Regime = 3,
  /**
   * Numerical failure (quadrature, Bessel range, degenerate variance).
   */
  PlStatus_Numerical = 5,
  PlStatus_Io = 6,
  /**
   * Output buffer too small.
   */
  PlStatus_BufferTooSmall = 7,
  /**
   * Internal panic caught at the boundary.
   */
  PlStatus_Panic = 99,
} PlStatus;

/**
 * Opaque handle to a finished particle simulation.
 */
typedef struct PlPbsRun PlPbsRun;

/**
 * Opaque scenario handle.
 */
typedef struct PlScenario PlScenario;

/**
 * Particle simulation settings.
 */
typedef struct PlPbsConfig {
  uintptr_t particles;
  double timestep;
  double duration;
  uint64_t seed;
  double sample_interval;
  /**
   * 0 uses all cores; results never depend on it.
   */
  uintptr_t workers;
} PlPbsConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last error on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *pl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pl_version(void);

/**
 * Parses a TOML scenario configuration.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PlStatus pl_scenario_from_toml(const char *config, struct PlScenario **out);

/**
 * # Safety
 * `scenario` must come from `pl_scenario_from_toml` and not be used
 * afterwards. Null is ignored.
 */
void pl_scenario_free(struct PlScenario *scenario);

/**
 * Whether the scenario's regime report carries any advisory verdict.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
bool pl_scenario_has_advisory(const struct PlScenario *scenario);

/**
 * Mean (m) and variance (m²) of the unwrapped axial displacement at `t`.
 *
 * # Safety
 * `scenario` must be a live handle; `mean` and `variance` valid pointers.
 */
enum PlStatus pl_moments(const struct PlScenario *scenario,
                         double t,
                         double *mean,
                         double *variance);

/**
 * Fraction of all molecules inside the receiver at `t` (not normalized).
 *
 * # Safety
 * `scenario` must be a live handle; `fraction` a valid pointer.
 */
enum PlStatus pl_received_signal(const struct PlScenario *scenario, double t, double *fraction);

/**
 * Normalized analytical received signal at `n` strictly increasing
 * positive times; with `steady`, the constant-flow baseline instead.
 *
 * # Safety
 * `t` and `out` must point to `n` doubles each.
 */
enum PlStatus pl_cir(const struct PlScenario *scenario,
                     const double *t,
                     uintptr_t n,
                     bool steady,
                     double *out);

/**
 * Desk-scale simulation settings (5·10⁴ particles, Δt = 0.5 ms, 10 s).
 */
struct PlPbsConfig pl_pbs_config_desk(void);

/**
 * Full-scale simulation settings (5·10⁵ particles, Δt = 0.1 ms, 20 s).
 */
struct PlPbsConfig pl_pbs_config_full(void);

/**
 * Particle simulation counted at `n` sample times (positive multiples of
 * the timestep).
 *
 * # Safety
 * `scenario` must be a live handle, `config` and `out` valid pointers and
 * `t` must point to `n` doubles.
 */
enum PlStatus pl_pbs_run(const struct PlScenario *scenario,
                         const struct PlPbsConfig *config,
                         const double *t,
                         uintptr_t n,
                         struct PlPbsRun **out);

/**
 * Number of samples in a simulation result.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
uintptr_t pl_pbs_run_len(const struct PlPbsRun *run);

/**
 * Copies the normalized signal (`normalized`) and raw receiver counts
 * (`counts`) into caller buffers of length `capacity`; either may be null.
 *
 * # Safety
 * `run` must be a live handle; non-null buffers must hold `capacity`
 * elements.
 */
enum PlStatus pl_pbs_run_copy(const struct PlPbsRun *run,
                              double *normalized,
                              uint64_t *counts,
                              uintptr_t capacity);

/**
 * Particles clamped onto the wall after exhausting resamples.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
uint64_t pl_pbs_run_wall_clamps(const struct PlPbsRun *run);

/**
 * # Safety
 * `run` must come from `pl_pbs_run` and not be used afterwards. Null is
 * ignored.
 */
void pl_pbs_run_free(struct PlPbsRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PULSATILE_LOOP_H */

#ifndef DISSIPON_H
#define DISSIPON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum DsStatus {
  DS_STATUS_OK = 0,
  DS_STATUS_NULL_POINTER = 1,
  DS_STATUS_DOMAIN = 2,
  DS_STATUS_VALIDATION = 3,
  DS_STATUS_NON_PASSIVE = 4,
  DS_STATUS_NOT_PSD = 5,
  DS_STATUS_UNSUPPORTED = 6,
  DS_STATUS_ACCURACY = 7,
  DS_STATUS_DIVERGENCE = 8,
  DS_STATUS_CONTOUR_SINGULARITY = 9,
  DS_STATUS_NEAR_SINGULAR = 10,
  DS_STATUS_STEP_SIZE = 11,
  DS_STATUS_IO = 12,
  DS_STATUS_PANIC = 13,
} DsStatus;

// Simulated trajectory ensemble handle.
typedef struct DsEnsemble DsEnsemble;

// Susceptibility model handle.
typedef struct DsModel DsModel;

// Bath temperature and statistics; `quantum` is 0 or 1.
typedef struct DsBath {
  double temperature;
  int32_t quantum;
  double hbar;
  double kb;
} DsBath;

// Brownian particle; `omega0 = 0` for a free particle. The initial
// momentum spread is thermal about `p0`.
typedef struct DsParticle {
  double mass;
  double omega0;
  double q0[3];
  double p0[3];
} DsParticle;

// Moving charge for Cherenkov spectra.
typedef struct DsCharge {
  double mass;
  double charge;
  double speed;
  double direction[3];
} DsCharge;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after success.
// Valid until the next call on the same thread.
const char *ds_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ds_version(void);

// Ohmic model from a symmetric friction tensor.
//
// # Safety
// `gamma` points to 9 doubles; `out` is writable.
enum DsStatus ds_model_ohmic(const double *gamma, struct DsModel **out);

// Lorentz model with per-axis `beta`, `nu`, `gamma` (3 each) and principal
// axes given by the columns of `rotation` (9 doubles, or null for identity).
//
// # Safety
// Array arguments point to the stated number of doubles; `out` is writable.
enum DsStatus ds_model_lorentz(const double *beta,
                               const double *nu,
                               const double *gamma,
                               const double *rotation,
                               struct DsModel **out);

// Tabulated Im χ: `n` frequencies and `9n` row-major samples.
//
// # Safety
// `omega` has `n` entries, `samples` has `9n`; `out` is writable.
enum DsStatus ds_model_tabulated(const double *omega,
                                 const double *samples,
                                 size_t n,
                                 struct DsModel **out);

// # Safety
// `model` is null or a handle from a `ds_model_*` constructor, not yet freed.
void ds_model_free(struct DsModel *model);

// `Im χ(ω)`.
//
// # Safety
// `model` is a live handle; `out` has room for 9 doubles.
enum DsStatus ds_model_im_chi(const struct DsModel *model, double omega, double *out);

// `χ(ω)` split into real and imaginary parts.
//
// # Safety
// `model` is a live handle; `re` and `im` have room for 9 doubles each.
enum DsStatus ds_model_chi_frequency(const struct DsModel *model,
                                     double omega,
                                     double *re,
                                     double *im);

// `χ(t)`.
//
// # Safety
// `model` is a live handle; `out` has room for 9 doubles.
enum DsStatus ds_model_chi_time(const struct DsModel *model, double t, double *out);

// `Re χ(ω)` from Im χ by the Kramers–Kronig principal value.
//
// # Safety
// `model` is a live handle; `out` has room for 9 doubles.
enum DsStatus ds_model_re_chi_kk(const struct DsModel *model, double omega, double *out);

// Noise power spectrum `ζ(ω)`.
//
// # Safety
// `model` and `bath` are valid; `out` has room for 9 doubles.
enum DsStatus ds_noise_spectrum(const struct DsModel *model,
                                const struct DsBath *bath,
                                double omega,
                                double *out);

// Symmetrized noise correlation `ζ(τ)`; `cutoff <= 0` means none.
//
// # Safety
// `model` and `bath` are valid; `out` has room for 9 doubles.
enum DsStatus ds_noise_correlation(const struct DsModel *model,
                                   const struct DsBath *bath,
                                   double tau,
                                   double cutoff,
                                   double *out);

// `η(t)` and `η̇(t)` at `n` increasing times, 9 doubles per time.
//
// # Safety
// `times` has `n` entries; `eta` and `eta_dot` have room for `9n` doubles.
enum DsStatus ds_propagators(const struct DsModel *model,
                             const struct DsParticle *particle,
                             const double *times,
                             size_t n,
                             double *eta,
                             double *eta_dot);

// `⟨|q(t) − q(t′)|²⟩` for a free particle; `cutoff <= 0` means none.
//
// # Safety
// Pointers are valid; `out` is writable.
enum DsStatus ds_msd(const struct DsModel *model,
                     const struct DsBath *bath,
                     const struct DsParticle *particle,
                     double t,
                     double t_prime,
                     double cutoff,
                     double *out);

// Monte Carlo ensemble of classical Langevin paths.
//
// # Safety
// Pointers are valid; `out` is writable.
enum DsStatus ds_simulate(const struct DsModel *model,
                          const struct DsBath *bath,
                          const struct DsParticle *particle,
                          double dt,
                          size_t n_steps,
                          size_t n_paths,
                          uint64_t seed,
                          size_t record_every,
                          struct DsEnsemble **out);

// # Safety
// `ens` is null or a handle from [`ds_simulate`], not yet freed.
void ds_ensemble_free(struct DsEnsemble *ens);

// Number of recorded time points.
//
// # Safety
// `ens` is a live handle; `out` is writable.
enum DsStatus ds_ensemble_n_records(const struct DsEnsemble *ens, size_t *out);

// Position of `path` at `record`.
//
// # Safety
// `ens` is a live handle; `out` has room for 3 doubles.
enum DsStatus ds_ensemble_position(const struct DsEnsemble *ens,
                                   size_t path,
                                   size_t record,
                                   double *out);

// Sample mean and standard error of `|q(t) − q(t′)|²`.
//
// # Safety
// `ens` is a live handle; `mean` and `std_error` are writable.
enum DsStatus ds_ensemble_msd(const struct DsEnsemble *ens,
                              double t,
                              double t_prime,
                              double *mean,
                              double *std_error);

// Up and down rates out of oscillator level `n` along axis `mode` (1..=3).
//
// # Safety
// Pointers are valid; `up` and `down` are writable.
enum DsStatus ds_oscillator_rates(const struct DsModel *model,
                                  const struct DsBath *bath,
                                  uint32_t mode,
                                  uint32_t n,
                                  double mass,
                                  double omega0,
                                  double *up,
                                  double *down);

// Decay constant and level shift of a two-level atom with dipole
// `dipole_re + i dipole_im` (3 each; `dipole_im` may be null).
//
// # Safety
// Pointers are valid; `gamma` and `shift` are writable.
enum DsStatus ds_decay_and_shift(const struct DsModel *model,
                                 double omega0,
                                 const double *dipole_re,
                                 const double *dipole_im,
                                 double hbar,
                                 double *gamma,
                                 double *shift);

// Cherenkov power spectrum at `n` increasing frequencies. The medium is
// `model` (ε = I + χ) when non-null, otherwise the constant
// `eps_re + i eps_im` (9 doubles each). Writes `n` densities and the
// trapezoid total.
//
// # Safety
// Pointers are valid for the stated sizes; `density` has room for `n`
// doubles and `total` is writable.
enum DsStatus ds_cherenkov_spectrum(const struct DsModel *model,
                                    const double *eps_re,
                                    const double *eps_im,
                                    const struct DsCharge *charge,
                                    const double *omega,
                                    size_t n,
                                    double *density,
                                    double *total);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DISSIPON_H */

#ifndef MPET_H
#define MPET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MPET_STATUS_OK = 0,
  MPET_STATUS_NULL_POINTER = 1,
  MPET_STATUS_INVALID_ARGUMENT = 2,
  MPET_STATUS_DIMENSION_MISMATCH = 3,
  MPET_STATUS_NUMERICAL_FAILURE = 4,
  MPET_STATUS_PARSE_ERROR = 5,
  MPET_STATUS_IO_ERROR = 6,
  MPET_STATUS_PANIC = 7,
} MpetStatus;

typedef enum {
  MPET_PROBLEM_MPT = 0,
  MPET_PROBLEM_MPET = 1,
} MpetProblem;

typedef enum {
  MPET_PRECONDITIONER_NAIVE = 0,
  MPET_PRECONDITIONER_TRANSFORMED = 1,
} MpetPreconditioner;

typedef enum {
  MPET_GUESS_ZERO = 0,
  MPET_GUESS_UNIFORM = 1,
  MPET_GUESS_SYMMETRIC = 2,
} MpetGuess;

/**
 * Opaque material parameter set.
 */
typedef struct MpetParams MpetParams;

/**
 * Opaque result of a diagonalization by congruence.
 */
typedef struct MpetTransform MpetTransform;

typedef struct {
  MpetProblem problem;
  MpetPreconditioner preconditioner;
  bool include_storage;
  /**
   * Threshold on `(B r_k, r_k) / (B r_0, r_0)`.
   */
  double tol;
  size_t maxit;
  uint64_t seed;
  MpetGuess guess;
} MpetSolveOptions;

typedef struct {
  size_t iterations;
  bool converged;
  double final_ratio;
  double wall_time;
  uint64_t seed;
} MpetSolveReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mpet_version(void);

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call into the library on this
 * thread.
 */
const char *mpet_last_error(void);

/**
 * Creates a parameter set for `j` networks. `alpha`, `s` and `k` hold `j`
 * entries; `xi` is the `j x j` exchange-rate matrix (row-major, symmetric,
 * zero diagonal) and may be null for no exchange.
 *
 * # Safety
 * Array arguments must point to at least the stated number of readable
 * doubles; `out` must be writable.
 */
MpetStatus mpet_params_new(size_t j,
                           double mu,
                           double lambda,
                           double tau,
                           const double *alpha,
                           const double *s,
                           const double *k,
                           const double *xi,
                           MpetParams **out);

/**
 * # Safety
 * `params` must be null or a handle from [`mpet_params_new`] not yet freed.
 */
void mpet_params_free(MpetParams *params);

/**
 * Number of networks, 0 for a null handle.
 *
 * # Safety
 * `params` must be null or a live handle.
 */
size_t mpet_params_networks(const MpetParams *params);

/**
 * Diagonalizes the `n x n` pair `(k, m)` by congruence; `k` must be
 * diagonal and positive, `m` symmetric.
 *
 * # Safety
 * `k` and `m` must hold `n * n` doubles; `out` must be writable.
 */
MpetStatus mpet_diagonalize(size_t n,
                            const double *k,
                            const double *m,
                            bool normalize,
                            MpetTransform **out);

/**
 * Transformation of a full parameter set; `include_storage` selects
 * whether the storage coefficients enter the diagonalized matrix.
 *
 * # Safety
 * `params` must be a live handle; `out` must be writable.
 */
MpetStatus mpet_transform_parameters(const MpetParams *params,
                                     bool include_storage,
                                     MpetTransform **out);

/**
 * # Safety
 * `t` must be null or a live transform handle.
 */
void mpet_transform_free(MpetTransform *t);

/**
 * Dimension `n` of the transform, 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
size_t mpet_transform_dim(const MpetTransform *t);

/**
 * Copies `P` (`n * n`, row-major) into `out`.
 *
 * # Safety
 * `t` must be a live handle; `out` must have room for `n * n` doubles.
 */
MpetStatus mpet_transform_p(const MpetTransform *t, double *out);

/**
 * Copies the diagonal of `PᵀKP` (`n` entries) into `out`.
 *
 * # Safety
 * `t` must be a live handle; `out` must have room for `n` doubles.
 */
MpetStatus mpet_transform_k_tilde(const MpetTransform *t, double *out);

/**
 * Copies the diagonal of `PᵀMP` (`n` entries) into `out`.
 *
 * # Safety
 * `t` must be a live handle; `out` must have room for `n` doubles.
 */
MpetStatus mpet_transform_gamma_tilde(const MpetTransform *t, double *out);

/**
 * Copies `Pᵀα` (`n` entries) into `out`. Only transforms built from a
 * parameter set carry it.
 *
 * # Safety
 * `t` must be a live handle; `out` must have room for `n` doubles.
 */
MpetStatus mpet_transform_alpha_tilde(const MpetTransform *t, double *out);

/**
 * Defaults: MPET, transformed preconditioner, storage excluded,
 * `tol = 1e-6`, `maxit = 5000`, seed 0, uniform random start.
 */
MpetSolveOptions mpet_solve_options_default(void);

/**
 * Assembles the unit-square problem on an `n x n` mesh, solves it with
 * preconditioned MinRes and fills `report`. Non-convergence is reported
 * through `report.converged`, not the status.
 *
 * # Safety
 * `params` must be a live handle; `opts` readable; `report` writable.
 */
MpetStatus mpet_solve(const MpetParams *params,
                      size_t n,
                      const MpetSolveOptions *opts,
                      MpetSolveReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPET_H */

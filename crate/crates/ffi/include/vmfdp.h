#ifndef VMFDP_H
#define VMFDP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define VMFDP_ZHU_ORIG 0

#define VMFDP_ZHU_PAPER 1

#define VMFDP_KAIROUZ_ORIG 0

#define VMFDP_KAIROUZ_PAPER 1

#define VMFDP_GAUSS_EXACT 0

#define VMFDP_GAUSS_ZHU 1

/**
 * Literal epochs for VMF, batch steps for the Gaussian.
 */
#define VMFDP_EPOCH_RULE_AUTO 0

#define VMFDP_EPOCH_RULE_LITERAL 1

#define VMFDP_EPOCH_RULE_STEPS 2

#define VMFDP_BC_DERIVATION 0

#define VMFDP_BC_THEOREM 1

/**
 * Result code of every call.
 */
typedef enum VmfdpStatus {
  VMFDP_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  VMFDP_STATUS_NULL_POINTER = 1,
  /**
   * An argument is outside the domain of the operation.
   */
  VMFDP_STATUS_DOMAIN = 2,
  /**
   * A numerical procedure failed (cancellation, no root, optimisation).
   */
  VMFDP_STATUS_NUMERICAL = 3,
  VMFDP_STATUS_MALFORMED_CHANNEL = 4,
  VMFDP_STATUS_DIMENSION_MISMATCH = 5,
  /**
   * Empty batch, zero vector or a mean that is not a unit vector.
   */
  VMFDP_STATUS_INVALID_VECTOR = 6,
  /**
   * No order certified the requested guarantee.
   */
  VMFDP_STATUS_NOT_CERTIFIED = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  VMFDP_STATUS_PANIC = 8,
} VmfdpStatus;

/**
 * A discrete channel matrix.
 */
typedef struct VmfdpChannel VmfdpChannel;

/**
 * A noise mechanism (Gaussian, VMF, or independent VMF blocks).
 */
typedef struct VmfdpMechanism VmfdpMechanism;

/**
 * A seeded random stream.
 */
typedef struct VmfdpRng VmfdpRng;

/**
 * Formula variants; `vmfdp_options_default` gives the reference settings.
 */
typedef struct VmfdpOptions {
  uint32_t zhu;
  uint32_t kairouz;
  uint32_t gauss_subsampling;
  uint32_t epoch_rule;
} VmfdpOptions;

/**
 * An `(epsilon, delta)` guarantee; `alpha_star` is NaN when no order was
 * needed.
 */
typedef struct VmfdpGuarantee {
  double epsilon;
  double delta;
  double log_delta;
  double alpha_star;
} VmfdpGuarantee;

/**
 * Subsampling rate, composition count and target delta. `count` is a
 * number of epochs unless `count_is_steps` is non-zero.
 */
typedef struct VmfdpScenario {
  double gamma;
  uint64_t count;
  uint8_t count_is_steps;
  double delta;
} VmfdpScenario;

typedef struct VmfdpAccountResult {
  double epsilon_approach1;
  double epsilon_approach2;
  double epsilon_best;
  /**
   * 1 or 2.
   */
  uint32_t winner;
  /**
   * Optimal order of the winning approach; NaN when none was needed.
   */
  double alpha_star;
} VmfdpAccountResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *vmfdp_version(void);

/**
 * Message of the last failed call on this thread (empty after a success).
 * Valid until the next call on the same thread.
 */
const char *vmfdp_last_error(void);

struct VmfdpOptions vmfdp_options_default(void);

/**
 * VMF mechanism on `S^{p-1}` with concentration `kappa`.
 */
enum VmfdpStatus vmfdp_mechanism_vmf(size_t p, double kappa, struct VmfdpMechanism **out);

/**
 * Gaussian mechanism in `R^p` with noise multiplier `sigma` and input
 * radius `radius`.
 */
enum VmfdpStatus vmfdp_mechanism_gauss(size_t p,
                                       double sigma,
                                       double radius,
                                       struct VmfdpMechanism **out);

/**
 * Independent VMF mechanisms on blocks of the given sizes, all with
 * concentration `kappa`.
 */
enum VmfdpStatus vmfdp_mechanism_vmf_blocks(const size_t *sizes,
                                            size_t n_blocks,
                                            double kappa,
                                            struct VmfdpMechanism **out);

void vmfdp_mechanism_free(struct VmfdpMechanism *m);

/**
 * Dimension of the mechanism's output space.
 */
enum VmfdpStatus vmfdp_mechanism_dim(const struct VmfdpMechanism *m, size_t *out);

/**
 * RDP bound `tau(alpha)`, `alpha >= 1`.
 */
enum VmfdpStatus vmfdp_rdp(const struct VmfdpMechanism *m, double alpha, double *out);

/**
 * Smallest delta certified at `epsilon` by a single run of the mechanism.
 */
enum VmfdpStatus vmfdp_delta_given_epsilon(const struct VmfdpMechanism *m,
                                           double epsilon,
                                           struct VmfdpGuarantee *out);

/**
 * Smallest epsilon certified at `delta` by a single run of the mechanism.
 */
enum VmfdpStatus vmfdp_epsilon_given_delta(const struct VmfdpMechanism *m,
                                           double delta,
                                           struct VmfdpGuarantee *out);

/**
 * Subsampled, composed accounting with both approaches. `opts` may be null
 * for the defaults.
 */
enum VmfdpStatus vmfdp_account(const struct VmfdpMechanism *m,
                               const struct VmfdpScenario *scenario,
                               const struct VmfdpOptions *opts,
                               struct VmfdpAccountResult *out);

/**
 * Natural log of the mechanism's Bayes' capacity. `form` selects the
 * Gaussian closed form (`VMFDP_BC_*`); it is ignored for VMF.
 */
enum VmfdpStatus vmfdp_capacity(const struct VmfdpMechanism *m, uint32_t form, double *out_log);

/**
 * Writes -1 if `a` is safer than `b` (smaller capacity), 0 if equal and
 * 1 if less safe. Both mechanisms must have the same dimension.
 */
enum VmfdpStatus vmfdp_compare(const struct VmfdpMechanism *a,
                               const struct VmfdpMechanism *b,
                               uint32_t form,
                               int32_t *out);

enum VmfdpStatus vmfdp_rng_new(uint64_t seed, struct VmfdpRng **out);

void vmfdp_rng_free(struct VmfdpRng *rng);

/**
 * Draws one VMF sample around the unit vector `mean[0..p]` into
 * `out[0..p]`.
 */
enum VmfdpStatus vmfdp_vmf_sample(struct VmfdpRng *rng,
                                  const double *mean,
                                  size_t p,
                                  double kappa,
                                  double *out);

/**
 * Channel from a row-major `rows x cols` matrix of probabilities.
 */
enum VmfdpStatus vmfdp_channel_new(const double *data,
                                   size_t rows,
                                   size_t cols,
                                   struct VmfdpChannel **out);

void vmfdp_channel_free(struct VmfdpChannel *c);

/**
 * Bayes' capacity (multiplicative) of a channel.
 */
enum VmfdpStatus vmfdp_channel_capacity(const struct VmfdpChannel *c, double *out);

/**
 * Multiplicative Bayes leakage of a channel under `prior[0..n]`.
 */
enum VmfdpStatus vmfdp_channel_leakage(const struct VmfdpChannel *c,
                                       const double *prior,
                                       size_t n,
                                       double *out);

/**
 * `a` followed by `b` (matrix product).
 */
enum VmfdpStatus vmfdp_channel_compose(const struct VmfdpChannel *a,
                                       const struct VmfdpChannel *b,
                                       struct VmfdpChannel **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VMFDP_H */

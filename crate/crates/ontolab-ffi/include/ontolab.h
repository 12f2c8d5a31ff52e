/* C ABI for the ontolab counting laboratory.
 *
 * Kept in sync with src/lib.rs; regenerate with `cbindgen --config
 * cbindgen.toml --crate ontolab-ffi --output include/ontolab.h` when the
 * surface changes.
 *
 * Conventions: constructors return a status code and write the new handle
 * through the out parameter; every handle type has a matching _free that
 * accepts NULL; array arguments carry explicit lengths; per-macrostate
 * results are ordered by ascending decimal rendering of the group values.
 */

#ifndef ONTOLAB_H
#define ONTOLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define ONTOLAB_OK 0
#define ONTOLAB_ERR_NULL_ARGUMENT 1
#define ONTOLAB_ERR_INVALID_ARGUMENT 2
#define ONTOLAB_ERR_LENGTH_MISMATCH 3
#define ONTOLAB_ERR_NOT_NORMALIZED 4
#define ONTOLAB_ERR_SPACE_MISMATCH 5
#define ONTOLAB_ERR_LEVEL_TOO_DEEP 6
#define ONTOLAB_ERR_ZERO_STATE 7
#define ONTOLAB_ERR_DIMENSION_MISMATCH 8
#define ONTOLAB_ERR_INSUFFICIENT_TRIALS 9

/* Weighted configuration space (opaque). */
typedef struct OntolabSpace OntolabSpace;

/* Normalized state over a space (opaque). */
typedef struct OntolabState OntolabState;

/* Macrostate partition (opaque). */
typedef struct OntolabPartition OntolabPartition;

/* Version string of the library; static storage, do not free. */
const char *ontolab_version(void);

/* Human-readable description of a status code; static storage, do not
 * free. */
const char *ontolab_error_message(int code);

/* Creates a space of len atoms with the given positive weights. */
int ontolab_space_new(const double *weights, size_t len, OntolabSpace **out);

void ontolab_space_free(OntolabSpace *space);

/* Number of atoms; 0 for NULL. */
size_t ontolab_space_len(const OntolabSpace *space);

/* Total measure weight; 0 for NULL. */
double ontolab_space_total_weight(const OntolabSpace *space);

/* Creates a normalized state from split real/imaginary amplitude arrays of
 * length len. The weighted squared norm must be 1 within 1e-8. */
int ontolab_state_new(const OntolabSpace *space, const double *re,
                      const double *im, size_t len, OntolabState **out);

/* Creates the deterministic pseudo-random normalized state for seed. */
int ontolab_state_seeded(const OntolabSpace *space, uint64_t seed,
                         OntolabState **out);

void ontolab_state_free(OntolabState *state);

/* Groups atoms into macrostates by assignment[i]. */
int ontolab_partition_new(const OntolabSpace *space, const uint32_t *assignment,
                          size_t len, OntolabPartition **out);

void ontolab_partition_free(OntolabPartition *partition);

/* Number of macrostates; 0 for NULL. */
size_t ontolab_partition_macro_count(const OntolabPartition *partition);

/* Group value of the macrostate at result position index; UINT32_MAX when
 * out of range. */
uint32_t ontolab_partition_group_at(const OntolabPartition *partition,
                                    size_t index);

/* Born weight per macrostate, written to out[0..len); len must equal the
 * macrostate count. */
int ontolab_born_probability(const OntolabState *state,
                             const OntolabPartition *partition, double *out,
                             size_t len);

/* Level-`level` refinement counting: wholly-contained block counts and
 * count / 2^level estimates per macrostate. */
int ontolab_count_estimate(const OntolabState *state,
                           const OntolabPartition *partition, uint32_t level,
                           uint64_t *out_blocks, double *out_estimates,
                           size_t len);

/* Uniform weight over supported macrostates. */
int ontolab_naive_branch_count(const OntolabState *state,
                               const OntolabPartition *partition, double *out,
                               size_t len);

/* Supported-atom counting per macrostate; out_uniform reports whether all
 * supported probability weights are equal, the only case in which this
 * scheme matches the Born weights. */
int ontolab_eigen_component_count(const OntolabState *state,
                                  const OntolabPartition *partition,
                                  double *out, size_t len, bool *out_uniform);

/* Monte Carlo weights induced by uniform sampling on the unitary orbits of
 * the branch components, with standard errors. Requires at least two
 * supported macrostates of equal dimension and at least 100 trials. */
int ontolab_orbit_overcount(const OntolabState *state,
                            const OntolabPartition *partition, uint64_t trials,
                            uint64_t seed, double *out_weights,
                            double *out_stderr, size_t len);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ONTOLAB_H */

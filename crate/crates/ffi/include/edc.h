#ifndef EDC_H
#define EDC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum EdcStatus {
  EdcStatus_Ok = 0,
  EdcStatus_NullPointer = 1,
  EdcStatus_Validation = 2,
  EdcStatus_Disconnected = 3,
  EdcStatus_SizeCap = 4,
  EdcStatus_Panic = 5,
} EdcStatus;

/**
 * TSP solver choice for [`edc_tour_new`].
 */
typedef enum EdcTspMode {
  EdcTspMode_Exact = 0,
  EdcTspMode_Heuristic = 1,
} EdcTspMode;

/**
 * Opaque metric-closed patrol graph.
 */
typedef struct EdcGraph EdcGraph;

/**
 * Opaque closed tour over an [`EdcGraph`].
 */
typedef struct EdcTour EdcTour;

/**
 * Policy chosen by the optimizers. `lag` is NaN for a single robot.
 */
typedef struct EdcPolicy {
  double tau;
  double speed;
  double lag;
  double probability;
} EdcPolicy;

/**
 * Pooled counts of a simulation.
 */
typedef struct EdcSimStats {
  uint64_t true_events;
  uint64_t confirmed_true;
  uint64_t false_positives;
  double estimate;
  double ci_halfwidth;
} EdcSimStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null if none failed.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *edc_last_error(void);

/**
 * Builds the metric closure of an undirected weighted graph. Edge `i` joins
 * `edge_u[i]` and `edge_v[i]` with weight `edge_w[i]`.
 *
 * # Safety
 * Array arguments must point to at least the stated number of elements;
 * `out` must be writable.
 */
enum EdcStatus edc_graph_new(const size_t *ids,
                             size_t n_ids,
                             const size_t *edge_u,
                             const size_t *edge_v,
                             const double *edge_w,
                             size_t n_edges,
                             struct EdcGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from [`edc_graph_new`] not yet freed.
 */
void edc_graph_free(struct EdcGraph *g);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t edc_graph_len(const struct EdcGraph *g);

/**
 * Shortest-path distance between two vertex ids.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum EdcStatus edc_graph_dist(const struct EdcGraph *g, size_t from, size_t to, double *out);

/**
 * Computes a closed tour over every vertex of `g`.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum EdcStatus edc_tour_new(const struct EdcGraph *g, enum EdcTspMode mode, struct EdcTour **out);

/**
 * # Safety
 * `t` must be null or a handle from [`edc_tour_new`] not yet freed.
 */
void edc_tour_free(struct EdcTour *t);

/**
 * Closed tour length, or NaN for a null handle.
 *
 * # Safety
 * `t` must be null or a live tour handle.
 */
double edc_tour_length(const struct EdcTour *t);

/**
 * Copies the visiting order as vertex ids into `buf` and returns the tour
 * size. Nothing is copied when `cap` is smaller than the tour.
 *
 * # Safety
 * `g` and `t` must be live handles, `t` built from `g`; `buf` must hold
 * `cap` elements.
 */
size_t edc_tour_order(const struct EdcGraph *g, const struct EdcTour *t, size_t *buf, size_t cap);

/**
 * Confirmation probability of one robot with period `tau`.
 *
 * # Safety
 * `out` must be writable.
 */
enum EdcStatus edc_confirm_prob_single(double tau, double mu, double t_crit, double *out);

/**
 * Confirmation probability of two robots on one tour, `lag` apart.
 *
 * # Safety
 * `out` must be writable.
 */
enum EdcStatus edc_confirm_prob_two_robots(double tau,
                                           double mu,
                                           double t_crit,
                                           double lag,
                                           double *out);

/**
 * Best two-robot lag and its probability.
 *
 * # Safety
 * `out_lag` and `out_prob` must be writable.
 */
enum EdcStatus edc_best_two_robot_lag(double tau,
                                      double mu,
                                      double t_crit,
                                      double *out_lag,
                                      double *out_prob);

/**
 * Single-robot period and speed for a tour of length `tsp_length`.
 *
 * # Safety
 * `out` must be writable.
 */
enum EdcStatus edc_optimize_single_robot(double tsp_length,
                                         double v_max,
                                         double mu,
                                         double t_crit,
                                         struct EdcPolicy *out);

/**
 * Two-robot period, speed and lag for a tour of length `tsp_length`.
 *
 * # Safety
 * `out` must be writable.
 */
enum EdcStatus edc_optimize_two_robots(double tsp_length,
                                       double v_max,
                                       double mu,
                                       double t_crit,
                                       struct EdcPolicy *out);

/**
 * Monte Carlo estimate of the confirmation probability for robots passing a
 * vertex every `tau` at the given offsets. Writes the estimate and its
 * standard error.
 *
 * # Safety
 * `lags` must hold `n_lags` elements; outputs must be writable.
 */
enum EdcStatus edc_simulate_conditioned(double tau,
                                        double mu,
                                        double t_crit,
                                        const double *lags,
                                        size_t n_lags,
                                        uint64_t samples,
                                        uint64_t seed,
                                        double *out_estimate,
                                        double *out_std_error);

/**
 * Free-running simulation of robots on `tour` at `speed`, offset by `lags`
 * (first entry 0). `lambda` and `mu` hold one rate per vertex in the
 * order of the ids given to [`edc_graph_new`] sorted ascending.
 *
 * # Safety
 * Handles must be live and `tour` built from `g`; arrays must hold the
 * stated number of elements; `out` must be writable.
 */
enum EdcStatus edc_simulate_patrol(const struct EdcGraph *g,
                                   const struct EdcTour *tour,
                                   double speed,
                                   const double *lags,
                                   size_t n_lags,
                                   const double *lambda,
                                   const double *mu,
                                   size_t n_vertices,
                                   double t_crit,
                                   double horizon,
                                   uint64_t replications,
                                   uint64_t seed,
                                   struct EdcSimStats *out);

/**
 * Whether one robot can detect and confirm every true event of a known
 * event list. Event `i` occurs at vertex id `vertex[i]` over
 * `[t_s[i], t_f[i]]`. `start_vertex` is a vertex id, or negative for a free
 * start.
 *
 * # Safety
 * `g` must be a live handle; arrays must hold `n_events` elements;
 * `out_feasible` must be writable.
 */
enum EdcStatus edc_offline_feasible(const struct EdcGraph *g,
                                    double t_crit,
                                    double speed,
                                    int64_t start_vertex,
                                    const size_t *vertex,
                                    const double *t_s,
                                    const double *t_f,
                                    size_t n_events,
                                    bool *out_feasible);

/**
 * Whether a unit-speed open path visits every vertex inside its window.
 * Windows are given per vertex in ascending id order.
 *
 * # Safety
 * `g` must be a live handle; arrays must hold `n` elements; `out_feasible`
 * must be writable.
 */
enum EdcStatus edc_tsptw_feasible(const struct EdcGraph *g,
                                  const double *earliest,
                                  const double *latest,
                                  size_t n,
                                  bool *out_feasible);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDC_H */

#ifndef PLAP_H
#define PLAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum PlapStatus {
  PLAP_STATUS_OK = 0,
  PLAP_STATUS_NULL_POINTER = 1,
  PLAP_STATUS_INVALID_ARGUMENT = 2,
  PLAP_STATUS_INVALID_GRAPH = 3,
  // The flow stopped at `max_iter`; the report is still written.
  PLAP_STATUS_NOT_CONVERGED = 4,
  PLAP_STATUS_NUMERICAL = 5,
  PLAP_STATUS_BUFFER_TOO_SMALL = 6,
  PLAP_STATUS_PANIC = 7,
} PlapStatus;

// Opaque graph handle.
typedef struct PlapGraph PlapGraph;

// Opaque result of [`plap_solve`].
typedef struct PlapReport PlapReport;

// Flow parameters. Start from [`plap_flow_config_default`].
typedef struct PlapFlowConfig {
  double p;
  // 1-based spectral index.
  size_t k;
  double tau;
  double delta;
  double tol;
  size_t max_iter;
  // Draw the initial weights from `seed` instead of starting at ones.
  bool random_init;
  uint64_t seed;
} PlapFlowConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or an empty string. The
// pointer stays valid until the next failing call on the same thread.
const char *plap_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *plap_version(void);

// Parses a graph from a NUL-terminated JSON document.
//
// # Safety
// `json` must be a valid C string and `out` a valid pointer.
enum PlapStatus plap_graph_from_json(const char *json, struct PlapGraph **out);

// Builds a `rows` x `cols` grid whose outer ring is the boundary.
//
// # Safety
// `out` must be a valid pointer.
enum PlapStatus plap_graph_grid(size_t rows, size_t cols, struct PlapGraph **out);

// Number of interior nodes, or 0 for a null handle.
//
// # Safety
// `graph` must be null or a live handle.
size_t plap_graph_num_interior(const struct PlapGraph *graph);

// # Safety
// `graph` must be null or a handle not yet freed.
void plap_graph_free(struct PlapGraph *graph);

// Default flow parameters for `p` and `k`.
struct PlapFlowConfig plap_flow_config_default(double p, size_t k);

// Runs the flow. On `PLAP_STATUS_OK` and `PLAP_STATUS_NOT_CONVERGED` a report
// is written to `out` and must be released with [`plap_report_free`].
//
// # Safety
// `graph` must be a live handle; `config` and `out` valid pointers.
enum PlapStatus plap_solve(const struct PlapGraph *graph,
                           const struct PlapFlowConfig *config,
                           struct PlapReport **out);

// `λ_p` of the report, or NaN for a null handle.
//
// # Safety
// `report` must be null or a live handle.
double plap_report_lambda_p(const struct PlapReport *report);

// Relative residual of the eigen-equation, or NaN for a null handle.
//
// # Safety
// `report` must be null or a live handle.
double plap_report_residual(const struct PlapReport *report);

// # Safety
// `report` must be null or a live handle.
size_t plap_report_iters(const struct PlapReport *report);

// # Safety
// `report` must be null or a live handle.
bool plap_report_converged(const struct PlapReport *report);

// Copies the eigenfunction (one value per interior node, in interior order)
// into `buf`. Returns `PLAP_STATUS_BUFFER_TOO_SMALL` if `len` is short.
//
// # Safety
// `report` must be a live handle and `buf` valid for `len` writes.
enum PlapStatus plap_report_eigenfunction(const struct PlapReport *report, double *buf, size_t len);

// # Safety
// `report` must be null or a handle not yet freed.
void plap_report_free(struct PlapReport *report);

// Relative residual of `Δ_p f = λ_lin^(p/2) |f|^(p-2) f` for `f` given on
// the interior nodes.
//
// # Safety
// `graph` must be a live handle, `f` valid for `len` reads and `out` a valid
// pointer.
enum PlapStatus plap_residual(const struct PlapGraph *graph,
                              const double *f,
                              size_t len,
                              double lambda_lin,
                              double p,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLAP_H */

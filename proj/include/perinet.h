#ifndef PERINET_H
#define PERINET_H

/* C interface to the periodic count-autoregression library. Handles are
 * opaque; every fallible call returns a status code and leaves a
 * description of the failure in pn_last_error() (thread-local). Strings
 * returned through char** are owned by the caller and released with
 * pn_string_free. Structured inputs and outputs are JSON text; the shapes
 * are documented in docs/formats.md. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PN_API __declspec(dllexport)
#else
#define PN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  PN_OK = 0,
  PN_ERR_VALIDATION = 2,
  PN_ERR_NUMERIC = 3,
  PN_ERR_IO = 4
};

typedef struct pn_model pn_model;
typedef struct pn_series pn_series;

PN_API const char* pn_version(void);

/* Message of the last failure on the calling thread; "" when the last call
 * succeeded. The pointer stays valid until the next call on this thread. */
PN_API const char* pn_last_error(void);

PN_API void pn_string_free(char* text);

PN_API int pn_model_from_json(const char* json, pn_model** out);
PN_API int pn_model_to_json(const pn_model* model, char** out);
PN_API void pn_model_free(pn_model* model);

PN_API int pn_counts_load(const char* path, pn_series** out);
PN_API int pn_counts_save(const pn_series* series, const char* path);
/* Fails unless the series carries a recorded intensity trace. */
PN_API int pn_intensities_save(const pn_series* series, const char* path);
PN_API int pn_series_shape(const pn_series* series, int64_t* steps, int32_t* nodes);
/* Node names as a JSON array of strings ("node_1".. when unnamed). */
PN_API int pn_series_names(const pn_series* series, char** names_json);
PN_API void pn_series_free(pn_series* series);

/* config: {"steps":N,"seed":S,"replicate":R,"burn_in":B,"markov":bool,
 * "intensities":bool}. markov requires a geometric-decay kernel. */
PN_API int pn_simulate(const pn_model* model, const char* config_json, pn_series** out);

/* options: {"mode":"global"|"periodic","margin":x,"classify":bool}. */
PN_API int pn_stability(const pn_model* model, const char* options_json,
                        char** verdict_json);

/* options: {"tau":x,"q":n,"refine":bool,"guard":bool}; tau defaults to a
 * fraction of the kernel's effective horizon. Returns the model with the
 * approximated kernel and the per-season error report. */
PN_API int pn_approximate(const pn_model* model, const char* options_json, pn_model** out,
                          char** report_json);

/* Unnormalized Poisson log-likelihood; normalized != 0 divides by the
 * number of periods covered. */
PN_API int pn_log_likelihood(const pn_model* model, const pn_series* data, int normalized,
                             double* out);

/* Builds a fit parametrization record from a descriptor with the
 * hyperparameters plus either an inline "network" or an "adjacency" CSV path
 * ("symmetric" to mirror edges, "node_names" to pin the column order). The
 * result is what pn_fit takes. */
PN_API int pn_layout_build(const char* descriptor_json, char** layout_json);

/* layout: parametrization record; options: {"threads":n,"max_iterations":k,
 * "gradient_tol":x,"init":[...]}. Returns the full fit record. */
PN_API int pn_fit(const pn_series* data, const char* layout_json, const char* options_json,
                  char** fit_json);

/* Lag curves implied by a fit record, sampled at k = 1..lags (lags <= 0
 * picks the kernel's effective horizon, capped at 200). */
PN_API int pn_fit_curves(const char* fit_json, int lags, char** curves_json);

/* options: {"split":t,"horizon":h,"paths":n,"seed":s,"name":...,
 * "refit":bool} plus either "fit": <fit record> or "model": <model record>.
 * Returns a forecast report over the rows after the split. */
PN_API int pn_rolling_forecast(const pn_series* data, const char* options_json,
                               char** report_json);

/* Merges forecast reports over the same tail and fills the pairwise
 * accuracy tests. */
PN_API int pn_compare_reports(const char* const* report_jsons, size_t count,
                              char** merged_json);

/* Runs a preset or staged experiment; returns the manifest. A failed stage
 * reports its status code and the manifest still describes the partial
 * bundle. */
PN_API int pn_run_experiment(const char* config_json, char** manifest_json);

#ifdef __cplusplus
}
#endif

#endif /* PERINET_H */

/* Copyright (c) 2026, The facade-sim Authors */
/* SPDX-License-Identifier: Apache-2.0 */

#ifndef FACADE_FACADE_H
#define FACADE_FACADE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FACADE_BUILDING_LIBRARY)
#    define FACADE_API __declspec(dllexport)
#  else
#    define FACADE_API __declspec(dllimport)
#  endif
#else
#  define FACADE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum facade_status {
    FACADE_OK = 0,
    FACADE_ERR_CONFIG = 1,
    FACADE_ERR_RUNTIME = 2,
    FACADE_ERR_ARGUMENT = 3,
    FACADE_ERR_IO = 4
} facade_status;

/* Message of the last failed call on this thread; "" if none. */
FACADE_API const char* facade_last_error(void);
FACADE_API const char* facade_version(void);

/* Releases strings returned through char** out-parameters. */
FACADE_API void facade_string_free(char* s);

/* Experiment configuration -------------------------------------------------- */

typedef struct facade_config facade_config;

FACADE_API facade_status facade_config_load(const char* path, facade_config** out);
FACADE_API facade_status facade_config_parse(const char* json_text, facade_config** out);
FACADE_API facade_status facade_config_set_seeds(facade_config* cfg, const uint64_t* seeds, size_t count);
/* Normalized JSON of the configuration, defaults filled in. */
FACADE_API facade_status facade_config_to_json(const facade_config* cfg, char** out_json);
FACADE_API void facade_config_free(facade_config* cfg);

FACADE_API facade_status facade_generate_data(const facade_config* cfg, const char* out_dir);
/* quiet != 0 suppresses per-seed progress on stderr. */
FACADE_API facade_status facade_run(const facade_config* cfg, const char* out_dir, int quiet);
/* Summary JSON (mean and std over seeds); also writes summary.csv/json. */
FACADE_API facade_status facade_metrics(const char* results_dir, char** out_json);

/* Theory report as JSON; *out_pass is 1 when every check passed. */
FACADE_API facade_status facade_theory(const char* config_path, char** out_json, int* out_pass);
FACADE_API facade_status facade_theory_parse(const char* json_text, char** out_json, int* out_pass);

/* Topology -------------------------------------------------------------------- */

typedef struct facade_topology facade_topology;

FACADE_API facade_status facade_topology_random_regular(size_t n, size_t degree, uint64_t seed,
                                                        facade_topology** out);
FACADE_API facade_status facade_topology_ring(size_t n, size_t degree, facade_topology** out);
FACADE_API size_t facade_topology_num_nodes(const facade_topology* t);
/* Writes up to `capacity` sorted neighbor ids; *out_count gets the degree. */
FACADE_API facade_status facade_topology_neighbors(const facade_topology* t, size_t node, size_t* out,
                                                   size_t capacity, size_t* out_count);
FACADE_API int facade_topology_is_connected(const facade_topology* t);
FACADE_API void facade_topology_free(facade_topology* t);

/* Fairness metrics ------------------------------------------------------------ */

FACADE_API facade_status facade_fair_accuracy(const double* per_cluster_acc, size_t k, double weight,
                                              double* out);
/* Parallel arrays of length n; groups compared are 0 and 1. */
FACADE_API facade_status facade_demographic_parity(const int* truth, const int* predicted, const size_t* group,
                                                   size_t n, double* out);
FACADE_API facade_status facade_equalized_odds(const int* truth, const int* predicted, const size_t* group,
                                               size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif

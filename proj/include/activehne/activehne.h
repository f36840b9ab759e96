/* C interface to the ActiveHNE library: heterogeneous graph embedding
 * with bandit-driven active label queries.
 *
 * All functions return AHNE_OK on success or a nonzero error code; the
 * message for the most recent failure on the calling thread is available
 * via ahne_last_error(). Handles are opaque and owned by the caller.
 */
#ifndef ACTIVEHNE_H
#define ACTIVEHNE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define AHNE_VERSION "0.1.0"

enum {
    AHNE_OK = 0,
    AHNE_ERR_CONFIG = 2,  /* bad configuration or parameters */
    AHNE_ERR_DATA = 3,    /* malformed or inconsistent input data */
    AHNE_ERR_NUMERIC = 4, /* numeric failure (divergence, non-finite values) */
    AHNE_ERR_OTHER = 5
};

typedef struct ahne_graph_s ahne_graph;

/* Message for the last error on this thread; empty string when none. */
const char* ahne_last_error(void);

const char* ahne_version(void);

/* Loads a graph from TSV files; features_path may be NULL (identity
 * features). The new handle is stored in *out. */
int ahne_graph_load(const char* nodes_path, const char* edges_path,
                    const char* features_path, ahne_graph** out);

/* Generates a planted-partition heterogeneous network. params_json keys:
 * types, classes, nodes_per_class, p_in, p_out, feature_noise, seed. */
int ahne_graph_synth(const char* params_json, ahne_graph** out);

/* Writes nodes.tsv / edges.tsv / features.tsv into dir. */
int ahne_graph_write_tsv(const ahne_graph* g, const char* dir);

typedef struct {
    size_t num_nodes;
    size_t num_edges;
    size_t num_types;
    size_t num_classes;
    size_t feature_dim;
} ahne_graph_info;

int ahne_graph_get_info(const ahne_graph* g, ahne_graph_info* out);

void ahne_graph_free(ahne_graph* g);

/* Runs the active-learning experiment described by config_json (see the
 * README for the schema). When out_dir is non-NULL, results.csv,
 * aggregate.csv and audit.jsonl are written there. When result_json is
 * non-NULL it receives a malloc'd JSON summary; free with
 * ahne_string_free(). */
int ahne_run_experiment(const ahne_graph* g, const char* config_json,
                        const char* out_dir, char** result_json);

/* Estimated K-order propagation work for the given config; used by the
 * ksweep guard. */
int ahne_propagation_cost(const ahne_graph* g, const char* config_json, double* out);

void ahne_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* ACTIVEHNE_H */

/* C interface to the priordepth library: opaque handles and status codes.
 * Every function returns PD_OK on success; on failure the return value
 * classifies the error and pd_last_error() carries the message (per thread).
 * Objects returned through out-parameters are owned by the caller and
 * released with the matching *_free function.
 */
#ifndef PRIORDEPTH_H
#define PRIORDEPTH_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pd_status {
    PD_OK = 0,
    PD_ERR_INVALID_ARGUMENT = 1,
    PD_ERR_IO = 2,
    PD_ERR_RUNTIME = 3
} pd_status;

/* Message of the most recent failure on the calling thread. */
const char* pd_last_error(void);

/* ---- tensors ----------------------------------------------------------- */

/* Dense (n, c, h, w) float32 array, row-major with w fastest. */
typedef struct pd_tensor pd_tensor;

/* data may be NULL for a zero-filled tensor. */
pd_status pd_tensor_create(uint32_t n, uint32_t c, uint32_t h, uint32_t w, const float* data,
                           pd_tensor** out);
/* PLT1 file format: magic "PLT1", 4 x u32 LE dims, f32 LE payload. */
pd_status pd_tensor_read(const char* path, pd_tensor** out);
pd_status pd_tensor_write(const pd_tensor* t, const char* path);
/* Binary PGM (P5, maxval 255) of the first channel, min-max normalized. */
pd_status pd_tensor_write_pgm(const pd_tensor* t, const char* path);
void pd_tensor_dims(const pd_tensor* t, uint32_t dims[4]);
const float* pd_tensor_data(const pd_tensor* t);
void pd_tensor_free(pd_tensor* t);

/* ---- depth evaluation --------------------------------------------------- */

typedef struct pd_metric_report {
    double abs_rel;
    double sq_rel;
    double rmse;
    double rmse_log;
    double delta1;
    double delta2;
    double delta3;
} pd_metric_report;

/* pred and gt are (1,1,h,w) depth maps in meters; mask may be NULL (all
 * pixels valid) or a (1,1,h,w) tensor where nonzero marks valid pixels.
 * median_scale rescales pred by median(gt)/median(pred) before clamping. */
pd_status pd_eval_metrics(const pd_tensor* pred, const pd_tensor* gt, const pd_tensor* mask,
                          int median_scale, int clamp, double clamp_lo, double clamp_hi,
                          pd_metric_report* out);

/* ---- synthetic-scene depth optimization demo ---------------------------- */

typedef struct pd_demo_config {
    char layout[16]; /* "two-plane", "three-plane" or "slanted" */
    int width;
    int height;
    int steps;
    double w_reproj;
    double w_smooth;
    double w_sbl;
    uint32_t seed;
    double fd_epsilon;
    double step_size;
    double init_depth;
    int threads; /* 0 = hardware concurrency */
} pd_demo_config;

/* Fills the defaults: two-plane 32x24, 200 steps, weights 1/1/0.1. */
void pd_demo_config_init(pd_demo_config* cfg);
/* Overlays a flat key=value config file onto cfg. */
pd_status pd_demo_config_load(const char* path, pd_demo_config* cfg);

typedef struct pd_demo_result {
    pd_metric_report metrics; /* final depth vs ground truth, median-scaled */
    double initial_loss;
    double final_loss;
    double boundary_sharpness;
    int rejected_steps;
} pd_demo_result;

/* Runs the finite-difference depth optimization on a synthetic scene and
 * writes loss.csv, metrics.csv, depth/target images under out_dir. */
pd_status pd_demo_run(const pd_demo_config* cfg, const char* out_dir, pd_demo_result* out);

/* ---- verification harnesses --------------------------------------------- */

/* module: "losses", "attention", "geometry" or "all". The report (one
 * "PASS|FAIL name: detail" line per check) is heap-allocated; release it
 * with pd_string_free. all_pass is set to 1 when every check passed. */
pd_status pd_gradcheck(const char* module, char** report, int* all_pass);
pd_status pd_blocks_shapecheck(char** report, int* all_pass);
void pd_string_free(char* s);

/* ---- attention inspection ----------------------------------------------- */

/* Criss-cross attention map of a seeded random feature map, shape
 * (1, h+w-1, h, w): weights over each position's row-and-column set. */
pd_status pd_attention_map(int channels, int h, int w, int reduction, uint32_t seed,
                           pd_tensor** out);
/* Expands the attention slice of position (u, v) (x = u, y = v) into a
 * (1,1,h,w) image with weights placed on the criss-cross set. */
pd_status pd_attention_place(const pd_tensor* tmap, int u, int v, pd_tensor** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PRIORDEPTH_H */

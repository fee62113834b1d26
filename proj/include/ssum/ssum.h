/* Copyright 2026 The ssumamba-cpp Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the hyperspectral denoiser. All handles are opaque and
 * owned by the caller; release them with the matching *_free function.
 * Functions return SSUM_OK or an error status; ssum_last_error() then
 * describes the failure for the calling thread.
 */

#ifndef SSUM_SSUM_H
#define SSUM_SSUM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SSUM_API __declspec(dllexport)
#else
#define SSUM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ssum_status {
  SSUM_OK = 0,
  SSUM_ERR_USAGE = 2,
  SSUM_ERR_DATA = 3,
  SSUM_ERR_NUMERIC = 4,
  SSUM_ERR_INTERNAL = 5
} ssum_status;

typedef enum ssum_dtype { SSUM_F32 = 0, SSUM_F64 = 1 } ssum_dtype;

typedef struct ssum_cube ssum_cube;
typedef struct ssum_config ssum_config;
typedef struct ssum_model ssum_model;
typedef struct ssum_scan ssum_scan;

typedef struct ssum_metrics {
  double psnr; /* dB */
  double ssim;
  double sam; /* radians */
} ssum_metrics;

SSUM_API const char* ssum_last_error(void);
SSUM_API const char* ssum_version(void);
/* Frees strings returned through char** out-parameters. */
SSUM_API void ssum_string_free(char* s);

/* Cubes: (bands, rows, cols) doubles. `values` may be NULL for zeros. */
SSUM_API ssum_status ssum_cube_create(uint32_t bands, uint32_t rows, uint32_t cols, const double* values,
                                      ssum_cube** out);
SSUM_API ssum_status ssum_cube_synthetic(uint32_t bands, uint32_t rows, uint32_t cols, uint32_t rank,
                                         uint64_t seed, ssum_cube** out);
SSUM_API ssum_status ssum_cube_load(const char* path, ssum_cube** out);
SSUM_API ssum_status ssum_cube_save(const ssum_cube* cube, const char* path, ssum_dtype dtype);
/* The dtype the cube was loaded with, SSUM_F64 for created cubes. */
SSUM_API ssum_dtype ssum_cube_dtype(const ssum_cube* cube);
SSUM_API void ssum_cube_dims(const ssum_cube* cube, uint32_t dims[3]);
SSUM_API const double* ssum_cube_data(const ssum_cube* cube);
SSUM_API void ssum_cube_free(ssum_cube* cube);
/* 8-bit RGB false-color image from three band indices, each min-max stretched. */
SSUM_API ssum_status ssum_cube_export_png(const ssum_cube* cube, const uint32_t bands[3], const char* path);

/* Configuration in `section.key = value` form. */
SSUM_API ssum_status ssum_config_default(ssum_config** out);
SSUM_API ssum_status ssum_config_parse(const char* text, ssum_config** out);
SSUM_API ssum_status ssum_config_load(const char* path, ssum_config** out);
SSUM_API ssum_status ssum_config_set(ssum_config* cfg, const char* key, const char* value);
SSUM_API ssum_status ssum_config_format(const ssum_config* cfg, char** text);
SSUM_API void ssum_config_free(ssum_config* cfg);

/* Degrades with the config's noise section and `seed`. `report`, if not
 * NULL, receives the realized per-band sigma and affected band lists. */
SSUM_API ssum_status ssum_degrade(const ssum_cube* clean, const ssum_config* cfg, uint64_t seed,
                                  ssum_cube** out, char** report);
SSUM_API ssum_status ssum_evaluate(const ssum_cube* reference, const ssum_cube* test, ssum_metrics* out);

/* Scan orders: RCB, RBC, CRB, CBR, BRC, BCR (dashes optional) or SWEEP. */
SSUM_API ssum_status ssum_scan_create(const char* scheme, uint32_t bands, uint32_t rows, uint32_t cols,
                                      ssum_scan** out);
SSUM_API size_t ssum_scan_length(const ssum_scan* scan);
/* coord = {band, row, col} of scan position k. */
SSUM_API ssum_status ssum_scan_coord(const ssum_scan* scan, size_t k, uint32_t coord[3]);
SSUM_API void ssum_scan_continuity(const ssum_scan* scan, size_t* pairs, size_t* discontinuities);
SSUM_API void ssum_scan_free(ssum_scan* scan);

/* Trains on the config's data section. With out_dir set, writes model.ssuw,
 * loss.csv and summary.txt there. `out` may be NULL. */
SSUM_API ssum_status ssum_train(const ssum_config* cfg, const char* out_dir, ssum_model** out);
/* Trains the matched variants of `axis` (scan-scheme, bidirectional,
 * residual, width) and returns the comparison table as CSV. */
SSUM_API ssum_status ssum_ablation(const ssum_config* cfg, const char* axis, char** csv);
SSUM_API ssum_status ssum_model_init(const ssum_config* cfg, ssum_model** out);
SSUM_API ssum_status ssum_model_load(const char* path, ssum_model** out);
SSUM_API ssum_status ssum_model_save(const ssum_model* model, const char* path);
SSUM_API size_t ssum_model_parameter_count(const ssum_model* model);
/* Reflect-pads to the model's spatial factor and processes cubes with more
 * bands than the training patch in overlapping band groups. */
SSUM_API ssum_status ssum_denoise(const ssum_model* model, const ssum_cube* noisy, uint32_t threads,
                                  ssum_cube** out);
SSUM_API void ssum_model_free(ssum_model* model);

#ifdef __cplusplus
}
#endif

#endif /* SSUM_SSUM_H */

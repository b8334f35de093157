#ifndef PINSURF_PINSURF_H
#define PINSURF_PINSURF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PINSURF_BUILDING)
#    define PINSURF_API __declspec(dllexport)
#  else
#    define PINSURF_API __declspec(dllimport)
#  endif
#else
#  define PINSURF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pinsurf_status {
  PINSURF_OK = 0,
  PINSURF_ERR_INVALID_INPUT = 1,
  PINSURF_ERR_DEGENERATE_REFERENCE = 2,
  PINSURF_ERR_PROTOCOL = 3,
  PINSURF_ERR_DEGENERATE_SIGNAL = 4,
  PINSURF_ERR_IO = 5,
  PINSURF_ERR_INTERNAL = 6
} pinsurf_status;

typedef enum pinsurf_method {
  PINSURF_METHOD_DCT = 0,
  PINSURF_METHOD_MP = 1,
  PINSURF_METHOD_RBF = 2,
  PINSURF_METHOD_WAVE = 3,
  PINSURF_METHOD_SEQ = 4
} pinsurf_method;

/* Message of the last failed call on this thread; "" after a success. */
PINSURF_API const char* pinsurf_last_error(void);
PINSURF_API const char* pinsurf_status_name(pinsurf_status status);
PINSURF_API const char* pinsurf_version(void);

/* "dct", "mp", "rbf", "wave", "seq" (case-insensitive). */
PINSURF_API pinsurf_status pinsurf_method_parse(const char* name, pinsurf_method* out);
PINSURF_API const char* pinsurf_method_name(pinsurf_method method);

/* ------------------------------------------------------------------------ */
/* Terms and frames */

typedef struct pinsurf_dct_term {
  int32_t index;
  double amplitude;
} pinsurf_dct_term;

typedef struct pinsurf_mp_atom {
  double amplitude;
  double scale;
  double position;
  double frequency;
  double phase;
} pinsurf_mp_atom;

typedef struct pinsurf_rbf_term {
  double amplitude;
  double width;
  double center_x;
  double center_y;
} pinsurf_rbf_term;

typedef struct pinsurf_wave_pair {
  double wavevector;
  double cos_amp;
  double sin_amp;
} pinsurf_wave_pair;

typedef struct pinsurf_seq_ref {
  int32_t module;
  double height_mm;
} pinsurf_seq_ref;

typedef struct pinsurf_term {
  pinsurf_method method;
  union {
    pinsurf_dct_term dct;
    pinsurf_mp_atom mp;
    pinsurf_rbf_term rbf;
    pinsurf_wave_pair wave;
    pinsurf_seq_ref seq;
  } u;
} pinsurf_term;

typedef struct pinsurf_frame {
  uint8_t header;
  uint8_t payload[8];
  int32_t seq_id; /* -1 when absent */
} pinsurf_frame;

typedef struct pinsurf_codec {
  size_t n_total;
  double stroke_mm;
} pinsurf_codec;

/* N = 16, stroke = 70 mm. */
PINSURF_API void pinsurf_codec_init(pinsurf_codec* codec);

/* SEQ terms become addressed frames; restart is ignored for them. */
PINSURF_API pinsurf_status pinsurf_encode(const pinsurf_term* term, const pinsurf_codec* codec, int restart,
                                          pinsurf_frame* out);
PINSURF_API pinsurf_status pinsurf_decode(const pinsurf_frame* frame, const pinsurf_codec* codec,
                                          pinsurf_term* out, int* restart);

/* Needs at most 48 bytes including the terminator. */
PINSURF_API pinsurf_status pinsurf_frame_to_hex(const pinsurf_frame* frame, char* buf, size_t cap);
PINSURF_API pinsurf_status pinsurf_frame_from_hex(const char* text, pinsurf_frame* out);

/* ------------------------------------------------------------------------ */
/* Delay experiments. CSV writers treat the path "-" as stdout. */

typedef struct pinsurf_delay_result {
  size_t n;
  int64_t t_msg_ms;
  pinsurf_method method;
  double tau_ms;
  double tau_pred_ms;
  size_t replicates;
} pinsurf_delay_result;

/* max_lag = 0 picks half the trace length. Positive when b lags a. */
PINSURF_API pinsurf_status pinsurf_xcorr_delay(const double* a, const double* b, size_t len, double dt_ms,
                                               size_t max_lag, double* out_ms);

PINSURF_API pinsurf_status pinsurf_delay_binary(size_t n, int64_t t_msg_ms, pinsurf_method method,
                                                size_t replicates, pinsurf_delay_result* out);
PINSURF_API pinsurf_status pinsurf_delay_wave(size_t n, int64_t t_msg_ms, pinsurf_method method,
                                              int64_t period_ms, size_t replicates, pinsurf_delay_result* out);

typedef struct pinsurf_delay_grid {
  int wave; /* 0: binary toggle, 1: travelling wave */
  const size_t* ns;
  size_t n_ns;
  const int64_t* t_msgs_ms;
  size_t n_t_msgs;
  const pinsurf_method* methods;
  size_t n_methods;
  size_t replicates;
  int64_t period_ms;
  unsigned threads; /* 0: hardware concurrency */
} pinsurf_delay_grid;

/* Writes n_methods * n_ns * n_t_msgs results in method, n, t_msg order. */
PINSURF_API pinsurf_status pinsurf_delay_run_grid(const pinsurf_delay_grid* grid, pinsurf_delay_result* out,
                                                  size_t out_cap, size_t* out_count);

PINSURF_API pinsurf_status pinsurf_delay_write_csv(const pinsurf_delay_result* results, size_t count,
                                                   const char* path);

/* ------------------------------------------------------------------------ */
/* Shapes */

PINSURF_API size_t pinsurf_shape_count(void);
PINSURF_API const char* pinsurf_shape_name(size_t index);

/* Row-major heights of a built-in 4x4 shape; cap must be >= 16. */
PINSURF_API pinsurf_status pinsurf_shape_values(const char* name, uint64_t seed, double* out, size_t cap,
                                                size_t* rows, size_t* cols);

typedef struct pinsurf_shape_options {
  const char* shape;
  pinsurf_method method;
  int quantized;
  size_t replicates;
  uint64_t seed;
  size_t max_terms;
  double noise_sigma_mm;
} pinsurf_shape_options;

/* parabola, MP, unquantized, 6 replicates, seed 1, 16 terms, no noise. */
PINSURF_API void pinsurf_shape_options_init(pinsurf_shape_options* options);

typedef struct pinsurf_curve pinsurf_curve;

PINSURF_API pinsurf_status pinsurf_shape_run(const pinsurf_shape_options* options, pinsurf_curve** out);
PINSURF_API size_t pinsurf_curve_size(const pinsurf_curve* curve);
PINSURF_API pinsurf_status pinsurf_curve_point(const pinsurf_curve* curve, size_t index, size_t* terms_used,
                                               double* rel_error, double* predicted_error);
PINSURF_API pinsurf_status pinsurf_curves_write_csv(const pinsurf_curve* const* curves, size_t count,
                                                    const char* path);
PINSURF_API void pinsurf_curve_free(pinsurf_curve* curve);

/* ------------------------------------------------------------------------ */
/* Object manipulation */

typedef struct pinsurf_trajectory {
  const double* waypoints_xy; /* x0, y0, x1, y1, ... in module units */
  size_t n_waypoints;
  int closed;
  double rate_hz;
  int64_t duration_ms;
  double sigma;
  double amplitude;
  double pitch_mm;
} pinsurf_trajectory;

/* No waypoints, closed, 60 Hz, 2000 ms, sigma 1, amplitude 1, 21.25 mm. */
PINSURF_API void pinsurf_trajectory_init(pinsurf_trajectory* trajectory);

typedef struct pinsurf_manipulation pinsurf_manipulation;

typedef struct pinsurf_manipulation_summary {
  size_t ticks;
  size_t total_frames;
  double path_length_mm;
  double duration_ms;
  double mean_speed_mm_s;
} pinsurf_manipulation_summary;

PINSURF_API pinsurf_status pinsurf_manipulation_run(const pinsurf_trajectory* trajectory, size_t n_cols,
                                                    size_t n_rows, pinsurf_manipulation** out);
/* Rectangle of width x height mm with its first corner at (x0, y0). */
PINSURF_API pinsurf_status pinsurf_manipulation_run_rectangle(double x0, double y0, double width_mm,
                                                              double height_mm,
                                                              const pinsurf_trajectory* options,
                                                              size_t n_cols, size_t n_rows,
                                                              pinsurf_manipulation** out);
PINSURF_API pinsurf_status pinsurf_manipulation_get_summary(const pinsurf_manipulation* run,
                                                            pinsurf_manipulation_summary* out);
/* targets may be NULL; otherwise cap must be >= n_cols * n_rows. */
PINSURF_API pinsurf_status pinsurf_manipulation_tick(const pinsurf_manipulation* run, size_t index,
                                                     double* time_ms, double* center_x, double* center_y,
                                                     size_t* frames, double* targets, size_t cap);
PINSURF_API pinsurf_status pinsurf_manipulation_write_csv(const pinsurf_manipulation* run, const char* path);
PINSURF_API void pinsurf_manipulation_free(pinsurf_manipulation* run);

#ifdef __cplusplus
}
#endif

#endif

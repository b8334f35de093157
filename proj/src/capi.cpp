#include "pinsurf/pinsurf.h"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "pinsurf/error.hpp"
#include "pinsurf/frame.hpp"
#include "pinsurf/harness.hpp"

using namespace pinsurf;

struct pinsurf_curve {
  ErrorCurve curve;
};

struct pinsurf_manipulation {
  ManipulationResult result;
};

namespace {

thread_local std::string g_last_error;

pinsurf_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return PINSURF_ERR_INVALID_INPUT;
    case ErrorCode::DegenerateReference: return PINSURF_ERR_DEGENERATE_REFERENCE;
    case ErrorCode::Protocol: return PINSURF_ERR_PROTOCOL;
    case ErrorCode::DegenerateSignal: return PINSURF_ERR_DEGENERATE_SIGNAL;
    case ErrorCode::Io: return PINSURF_ERR_IO;
  }
  return PINSURF_ERR_INTERNAL;
}

// Runs fn, mapping exceptions onto status codes and the thread's message.
template <class Fn>
pinsurf_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PINSURF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return PINSURF_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::InvalidInput, std::string(what) + " is NULL");
}

Form to_form(pinsurf_method m) {
  if (m < PINSURF_METHOD_DCT || m > PINSURF_METHOD_SEQ) fail(ErrorCode::InvalidInput, "unknown method");
  return static_cast<Form>(m);
}

CodecConfig to_codec(const pinsurf_codec* codec) {
  if (codec == nullptr) return {};
  return {codec->n_total, codec->stroke_mm};
}

Term to_term(const pinsurf_term& t) {
  switch (to_form(t.method)) {
    case Form::Dct: return DctTerm{t.u.dct.index, t.u.dct.amplitude};
    case Form::Mp: return MpAtom{t.u.mp.amplitude, t.u.mp.scale, t.u.mp.position, t.u.mp.frequency, t.u.mp.phase};
    case Form::Rbf: return RbfTerm{t.u.rbf.amplitude, t.u.rbf.width, t.u.rbf.center_x, t.u.rbf.center_y};
    case Form::Wave: return WavePair{t.u.wave.wavevector, t.u.wave.cos_amp, t.u.wave.sin_amp};
    case Form::Seq: return SeqRef{t.u.seq.module, t.u.seq.height_mm};
  }
  fail(ErrorCode::InvalidInput, "unknown method");
}

pinsurf_term from_term(const Term& term) {
  pinsurf_term out{};
  out.method = static_cast<pinsurf_method>(form_of(term));
  if (const auto* d = std::get_if<DctTerm>(&term)) out.u.dct = {d->index, d->amplitude};
  if (const auto* a = std::get_if<MpAtom>(&term)) {
    out.u.mp = {a->amplitude, a->scale, a->position, a->frequency, a->phase};
  }
  if (const auto* r = std::get_if<RbfTerm>(&term)) out.u.rbf = {r->amplitude, r->width, r->center_x, r->center_y};
  if (const auto* w = std::get_if<WavePair>(&term)) out.u.wave = {w->wavevector, w->cos_amp, w->sin_amp};
  if (const auto* s = std::get_if<SeqRef>(&term)) out.u.seq = {s->module, s->height};
  return out;
}

Frame to_frame(const pinsurf_frame& f) {
  Frame out;
  out.header = f.header;
  std::copy(std::begin(f.payload), std::end(f.payload), out.payload.begin());
  if (f.seq_id >= 0) out.seq_id = f.seq_id;
  return out;
}

pinsurf_frame from_frame(const Frame& f) {
  pinsurf_frame out{};
  out.header = f.header;
  std::copy(f.payload.begin(), f.payload.end(), std::begin(out.payload));
  out.seq_id = f.seq_id.value_or(-1);
  return out;
}

pinsurf_delay_result from_delay(const DelayResult& r) {
  return {r.n, static_cast<int64_t>(r.t_msg.count()), static_cast<pinsurf_method>(r.method), r.tau_measured_ms,
          r.tau_predicted_ms, r.replicates};
}

DelayResult to_delay(const pinsurf_delay_result& r) {
  return {r.n, Millis{r.t_msg_ms}, to_form(r.method), r.tau_ms, r.tau_pred_ms, r.replicates};
}

TrajectoryScript to_script(const pinsurf_trajectory& t) {
  TrajectoryScript s;
  if (t.n_waypoints > 0) require(t.waypoints_xy, "waypoints");
  for (std::size_t i = 0; i < t.n_waypoints; ++i) {
    s.waypoints.emplace_back(t.waypoints_xy[2 * i], t.waypoints_xy[2 * i + 1]);
  }
  s.closed = t.closed != 0;
  s.rate_hz = t.rate_hz;
  s.duration = Millis{t.duration_ms};
  s.sigma = t.sigma;
  s.amplitude = t.amplitude;
  s.pitch_mm = t.pitch_mm;
  return s;
}

}  // namespace

extern "C" {

const char* pinsurf_last_error(void) { return g_last_error.c_str(); }

const char* pinsurf_status_name(pinsurf_status status) {
  switch (status) {
    case PINSURF_OK: return "ok";
    case PINSURF_ERR_INVALID_INPUT: return "invalid input";
    case PINSURF_ERR_DEGENERATE_REFERENCE: return "degenerate reference";
    case PINSURF_ERR_PROTOCOL: return "protocol error";
    case PINSURF_ERR_DEGENERATE_SIGNAL: return "degenerate signal";
    case PINSURF_ERR_IO: return "i/o error";
    case PINSURF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pinsurf_version(void) { return "1.0.0"; }

pinsurf_status pinsurf_method_parse(const char* name, pinsurf_method* out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (int m = PINSURF_METHOD_DCT; m <= PINSURF_METHOD_SEQ; ++m) {
      if (s == form_name(static_cast<Form>(m))) {
        *out = static_cast<pinsurf_method>(m);
        return;
      }
    }
    fail(ErrorCode::InvalidInput, "unknown method '" + std::string(name) + "'");
  });
}

const char* pinsurf_method_name(pinsurf_method method) {
  if (method < PINSURF_METHOD_DCT || method > PINSURF_METHOD_SEQ) return "?";
  return form_name(static_cast<Form>(method)).data();
}

void pinsurf_codec_init(pinsurf_codec* codec) {
  if (codec == nullptr) return;
  const CodecConfig d;
  codec->n_total = d.n_total;
  codec->stroke_mm = d.stroke_mm;
}

pinsurf_status pinsurf_encode(const pinsurf_term* term, const pinsurf_codec* codec, int restart,
                              pinsurf_frame* out) {
  return guarded([&] {
    require(term, "term");
    require(out, "out");
    const Term t = to_term(*term);
    const CodecConfig c = to_codec(codec);
    if (const auto* s = std::get_if<SeqRef>(&t)) {
      *out = from_frame(encode_seq_ref(s->module, s->height, c));
    } else {
      *out = from_frame(encode_term(t, c, restart != 0));
    }
  });
}

pinsurf_status pinsurf_decode(const pinsurf_frame* frame, const pinsurf_codec* codec, pinsurf_term* out,
                              int* restart) {
  return guarded([&] {
    require(frame, "frame");
    require(out, "out");
    const Frame f = to_frame(*frame);
    *out = from_term(decode_frame(f, to_codec(codec)));
    if (restart != nullptr) *restart = frame_restart(f) ? 1 : 0;
  });
}

pinsurf_status pinsurf_frame_to_hex(const pinsurf_frame* frame, char* buf, size_t cap) {
  return guarded([&] {
    require(frame, "frame");
    require(buf, "buf");
    const std::string hex = frame_to_hex(to_frame(*frame));
    if (hex.size() + 1 > cap) fail(ErrorCode::InvalidInput, "frame_to_hex: buffer too small");
    std::memcpy(buf, hex.c_str(), hex.size() + 1);
  });
}

pinsurf_status pinsurf_frame_from_hex(const char* text, pinsurf_frame* out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = from_frame(frame_from_hex(text));
  });
}

pinsurf_status pinsurf_xcorr_delay(const double* a, const double* b, size_t len, double dt_ms, size_t max_lag,
                                   double* out_ms) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out_ms, "out");
    std::optional<std::size_t> lag;
    if (max_lag > 0) lag = max_lag;
    *out_ms = xcorr_delay({a, len}, {b, len}, dt_ms, lag);
  });
}

pinsurf_status pinsurf_delay_binary(size_t n, int64_t t_msg_ms, pinsurf_method method, size_t replicates,
                                    pinsurf_delay_result* out) {
  return guarded([&] {
    require(out, "out");
    *out = from_delay(run_delay_binary(n, Millis{t_msg_ms}, to_form(method), replicates));
  });
}

pinsurf_status pinsurf_delay_wave(size_t n, int64_t t_msg_ms, pinsurf_method method, int64_t period_ms,
                                  size_t replicates, pinsurf_delay_result* out) {
  return guarded([&] {
    require(out, "out");
    *out = from_delay(run_delay_wave(n, Millis{t_msg_ms}, to_form(method), Millis{period_ms}, replicates));
  });
}

pinsurf_status pinsurf_delay_run_grid(const pinsurf_delay_grid* grid, pinsurf_delay_result* out, size_t out_cap,
                                      size_t* out_count) {
  return guarded([&] {
    require(grid, "grid");
    require(out, "out");
    DelayGrid g;
    g.wave = grid->wave != 0;
    if (grid->n_ns > 0) require(grid->ns, "ns");
    if (grid->n_t_msgs > 0) require(grid->t_msgs_ms, "t_msgs");
    if (grid->n_methods > 0) require(grid->methods, "methods");
    g.ns.assign(grid->ns, grid->ns + grid->n_ns);
    for (size_t i = 0; i < grid->n_t_msgs; ++i) g.t_msgs.emplace_back(grid->t_msgs_ms[i]);
    for (size_t i = 0; i < grid->n_methods; ++i) g.methods.push_back(to_form(grid->methods[i]));
    g.replicates = grid->replicates;
    g.period = Millis{grid->period_ms};
    g.threads = grid->threads;
    if (grid->n_ns * grid->n_t_msgs * grid->n_methods > out_cap) {
      fail(ErrorCode::InvalidInput, "delay grid: output buffer too small");
    }
    const auto results = run_delay_grid(g);
    for (size_t i = 0; i < results.size(); ++i) out[i] = from_delay(results[i]);
    if (out_count != nullptr) *out_count = results.size();
  });
}

pinsurf_status pinsurf_delay_write_csv(const pinsurf_delay_result* results, size_t count, const char* path) {
  return guarded([&] {
    if (count > 0) require(results, "results");
    require(path, "path");
    std::vector<DelayResult> rs;
    for (size_t i = 0; i < count; ++i) rs.push_back(to_delay(results[i]));
    emit_csv(rs, path);
  });
}

size_t pinsurf_shape_count(void) { return all_builtin_shapes().size(); }

const char* pinsurf_shape_name(size_t index) {
  const auto& shapes = all_builtin_shapes();
  if (index >= shapes.size()) return nullptr;
  return builtin_shape_name(shapes[index]).data();
}

pinsurf_status pinsurf_shape_values(const char* name, uint64_t seed, double* out, size_t cap, size_t* rows,
                                    size_t* cols) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    const ShapeGrid grid = builtin_shape(parse_builtin_shape(name), seed);
    if (grid.size() > cap) fail(ErrorCode::InvalidInput, "shape_values: buffer too small");
    std::copy(grid.heights().begin(), grid.heights().end(), out);
    if (rows != nullptr) *rows = grid.rows();
    if (cols != nullptr) *cols = grid.cols();
  });
}

void pinsurf_shape_options_init(pinsurf_shape_options* options) {
  if (options == nullptr) return;
  const ShapeExperiment d;
  options->shape = "parabola";
  options->method = PINSURF_METHOD_MP;
  options->quantized = 0;
  options->replicates = d.replicates;
  options->seed = d.seed;
  options->max_terms = d.max_terms;
  options->noise_sigma_mm = d.noise_sigma_mm;
}

pinsurf_status pinsurf_shape_run(const pinsurf_shape_options* options, pinsurf_curve** out) {
  return guarded([&] {
    require(options, "options");
    require(out, "out");
    *out = nullptr;
    require(options->shape, "shape");
    ShapeExperiment ex;
    ex.shape = parse_builtin_shape(options->shape);
    ex.method = to_form(options->method);
    ex.quantized = options->quantized != 0;
    ex.replicates = options->replicates;
    ex.seed = options->seed;
    ex.max_terms = options->max_terms;
    ex.noise_sigma_mm = options->noise_sigma_mm;
    *out = new pinsurf_curve{run_shape_experiment(ex)};
  });
}

size_t pinsurf_curve_size(const pinsurf_curve* curve) { return curve ? curve->curve.points.size() : 0; }

pinsurf_status pinsurf_curve_point(const pinsurf_curve* curve, size_t index, size_t* terms_used,
                                   double* rel_error, double* predicted_error) {
  return guarded([&] {
    require(curve, "curve");
    if (index >= curve->curve.points.size()) fail(ErrorCode::InvalidInput, "curve_point: index out of range");
    const ErrorPoint& p = curve->curve.points[index];
    if (terms_used != nullptr) *terms_used = p.terms_used;
    if (rel_error != nullptr) *rel_error = p.rel_error;
    if (predicted_error != nullptr) *predicted_error = p.predicted_error;
  });
}

pinsurf_status pinsurf_curves_write_csv(const pinsurf_curve* const* curves, size_t count, const char* path) {
  return guarded([&] {
    if (count > 0) require(curves, "curves");
    require(path, "path");
    std::vector<ErrorCurve> cs;
    for (size_t i = 0; i < count; ++i) {
      require(curves[i], "curve");
      cs.push_back(curves[i]->curve);
    }
    emit_csv(cs, path);
  });
}

void pinsurf_curve_free(pinsurf_curve* curve) { delete curve; }

void pinsurf_trajectory_init(pinsurf_trajectory* trajectory) {
  if (trajectory == nullptr) return;
  const TrajectoryScript d;
  trajectory->waypoints_xy = nullptr;
  trajectory->n_waypoints = 0;
  trajectory->closed = d.closed ? 1 : 0;
  trajectory->rate_hz = d.rate_hz;
  trajectory->duration_ms = d.duration.count();
  trajectory->sigma = d.sigma;
  trajectory->amplitude = d.amplitude;
  trajectory->pitch_mm = d.pitch_mm;
}

pinsurf_status pinsurf_manipulation_run(const pinsurf_trajectory* trajectory, size_t n_cols, size_t n_rows,
                                        pinsurf_manipulation** out) {
  return guarded([&] {
    require(trajectory, "trajectory");
    require(out, "out");
    *out = nullptr;
    *out = new pinsurf_manipulation{run_manipulation(to_script(*trajectory), n_cols, n_rows)};
  });
}

pinsurf_status pinsurf_manipulation_run_rectangle(double x0, double y0, double width_mm, double height_mm,
                                                  const pinsurf_trajectory* options, size_t n_cols,
                                                  size_t n_rows, pinsurf_manipulation** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    pinsurf_trajectory opts;
    pinsurf_trajectory_init(&opts);
    if (options != nullptr) opts = *options;
    TrajectoryScript script = rectangle_script(x0, y0, width_mm, height_mm, opts.pitch_mm);
    script.rate_hz = opts.rate_hz;
    script.duration = Millis{opts.duration_ms};
    script.sigma = opts.sigma;
    script.amplitude = opts.amplitude;
    *out = new pinsurf_manipulation{run_manipulation(script, n_cols, n_rows)};
  });
}

pinsurf_status pinsurf_manipulation_get_summary(const pinsurf_manipulation* run,
                                                pinsurf_manipulation_summary* out) {
  return guarded([&] {
    require(run, "run");
    require(out, "out");
    const auto& r = run->result;
    *out = {r.ticks.size(), r.total_frames, r.path_length_mm, r.duration_ms, r.mean_speed_mm_s};
  });
}

pinsurf_status pinsurf_manipulation_tick(const pinsurf_manipulation* run, size_t index, double* time_ms,
                                         double* center_x, double* center_y, size_t* frames, double* targets,
                                         size_t cap) {
  return guarded([&] {
    require(run, "run");
    if (index >= run->result.ticks.size()) fail(ErrorCode::InvalidInput, "manipulation_tick: index out of range");
    const ManipulationTick& t = run->result.ticks[index];
    if (time_ms != nullptr) *time_ms = t.time_ms;
    if (center_x != nullptr) *center_x = t.center_x;
    if (center_y != nullptr) *center_y = t.center_y;
    if (frames != nullptr) *frames = t.frames;
    if (targets != nullptr) {
      if (cap < t.targets.size()) fail(ErrorCode::InvalidInput, "manipulation_tick: buffer too small");
      std::copy(t.targets.begin(), t.targets.end(), targets);
    }
  });
}

pinsurf_status pinsurf_manipulation_write_csv(const pinsurf_manipulation* run, const char* path) {
  return guarded([&] {
    require(run, "run");
    require(path, "path");
    emit_csv(run->result, path);
  });
}

void pinsurf_manipulation_free(pinsurf_manipulation* run) { delete run; }

}  // extern "C"

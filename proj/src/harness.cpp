#include "pinsurf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "pinsurf/error.hpp"

namespace pinsurf {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Pearson correlation of a[i] and b[i + lag] over their overlap; NaN when
// either segment is constant.
double pearson_at(std::span<const double> a, std::span<const double> b, std::ptrdiff_t lag) {
  const auto len = static_cast<std::ptrdiff_t>(a.size());
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -lag);
  const std::ptrdiff_t hi = std::min(len, len - lag);
  const auto count = static_cast<double>(hi - lo);
  if (hi - lo < 2) return std::numeric_limits<double>::quiet_NaN();
  double ma = 0.0, mb = 0.0;
  for (std::ptrdiff_t i = lo; i < hi; ++i) {
    ma += a[static_cast<std::size_t>(i)];
    mb += b[static_cast<std::size_t>(i + lag)];
  }
  ma /= count;
  mb /= count;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::ptrdiff_t i = lo; i < hi; ++i) {
    const double da = a[static_cast<std::size_t>(i)] - ma;
    const double db = b[static_cast<std::size_t>(i + lag)] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

bool has_variance(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi > *lo;
}

void append(Timeline& into, const Timeline& burst) {
  into.events.insert(into.events.end(), burst.events.begin(), burst.events.end());
  into.horizon = std::max(into.horizon, burst.horizon);
}

std::span<const double> window(const std::vector<double>& trace, std::size_t begin, std::size_t len) {
  return std::span<const double>(trace).subspan(begin, len);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double xcorr_delay(std::span<const double> a, std::span<const double> b, double dt_ms,
                   std::optional<std::size_t> max_lag) {
  if (a.size() != b.size() || a.size() < 2) {
    fail(ErrorCode::InvalidInput, "xcorr_delay: traces need equal length >= 2");
  }
  if (!(dt_ms > 0.0)) fail(ErrorCode::InvalidInput, "xcorr_delay: dt must be positive");
  if (!has_variance(a) || !has_variance(b)) {
    fail(ErrorCode::DegenerateSignal, "xcorr_delay: zero-variance trace");
  }
  const auto limit = static_cast<std::ptrdiff_t>(
      std::min(max_lag.value_or(a.size() / 2), a.size() - 2));

  // Visit lags by increasing |lag| so near-ties resolve to the smaller shift.
  std::ptrdiff_t best_lag = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::ptrdiff_t m = 0; m <= limit; ++m) {
    for (const std::ptrdiff_t lag : {-m, m}) {
      if (m == 0 && lag != 0) continue;
      const double c = pearson_at(a, b, lag);
      if (!std::isnan(c) && c > best + 1e-12) {
        best = c;
        best_lag = lag;
      }
      if (m == 0) break;
    }
  }
  if (!std::isfinite(best)) fail(ErrorCode::DegenerateSignal, "xcorr_delay: no valid lag");

  double shift = 0.0;
  if (best_lag > -limit && best_lag < limit) {
    const double cm = pearson_at(a, b, best_lag - 1);
    const double cp = pearson_at(a, b, best_lag + 1);
    const double denom = cm - 2.0 * best + cp;
    if (std::isfinite(cm) && std::isfinite(cp) && denom < 0.0) {
      shift = std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
    }
  }
  return (static_cast<double>(best_lag) + shift) * dt_ms;
}

// ---------------------------------------------------------------------------

DelayResult run_delay_binary(std::size_t n, Millis t_msg, Form method, std::size_t replicates) {
  if (n < 2) fail(ErrorCode::InvalidInput, "delay-binary: n must be >= 2");
  if (t_msg <= Millis{0}) fail(ErrorCode::InvalidInput, "delay-binary: t_msg must be positive");
  if (replicates == 0) fail(ErrorCode::InvalidInput, "delay-binary: replicates must be >= 1");
  if (method != Form::Seq && method != Form::Dct && method != Form::Wave) {
    fail(ErrorCode::InvalidInput, "delay-binary: method must be seq, dct or wave");
  }

  RobotConfig config;
  config.n_modules = n;
  config.initial_level = 0.0;
  const CodecConfig codec{n, config.motor.stroke_mm};

  // Each half period holds one level long enough for a full sequential sweep
  // plus margin.
  const Millis half = 2 * static_cast<long>(n) * t_msg + Millis{100};
  const Millis cycle = 2 * half;
  Timeline plan;
  for (std::size_t r = 0; r < replicates; ++r) {
    for (int phase = 0; phase < 2; ++phase) {
      const double level = phase == 0 ? 1.0 : 0.0;
      const Millis start = static_cast<long>(r) * cycle + phase * half;
      std::vector<Frame> frames;
      if (method == Form::Seq) {
        for (std::size_t m = 0; m < n; ++m) {
          frames.push_back(encode_seq_ref(static_cast<int>(m), level * codec.stroke_mm, codec));
        }
        append(plan, schedule(frames, {t_msg, BusMode::Sequential}, start));
      } else {
        const Term term = method == Form::Dct ? Term{DctTerm{0, level}} : Term{WavePair{0.0, 0.0, level}};
        frames.push_back(encode_term(term, codec, true));
        append(plan, schedule(frames, {t_msg, BusMode::Broadcast}, start));
      }
    }
  }
  // Windows start mid-plateau so both level changes sit well inside them.
  const auto len = static_cast<std::size_t>(cycle.count());
  const auto offset = static_cast<std::size_t>(half.count() / 2);
  const auto traces = run_robot(config, plan, static_cast<long>(replicates) * cycle + half);

  std::vector<double> taus;
  const auto max_lag = static_cast<std::size_t>(half.count() / 2);
  for (std::size_t r = 0; r < replicates; ++r) {
    const std::size_t begin = offset + r * len;
    taus.push_back(xcorr_delay(window(traces.front().target_f, begin, len),
                               window(traces.back().target_f, begin, len), 1.0, max_lag));
  }
  DelayResult out{n, t_msg, method, mean(taus), 0.0, replicates};
  if (method == Form::Seq) out.tau_predicted_ms = static_cast<double>((n - 1) * t_msg.count());
  return out;
}

DelayResult run_delay_wave(std::size_t n, Millis t_msg, Form method, Millis period,
                           std::size_t replicates) {
  if (n < 2) fail(ErrorCode::InvalidInput, "delay-wave: n must be >= 2");
  if (t_msg <= Millis{0}) fail(ErrorCode::InvalidInput, "delay-wave: t_msg must be positive");
  if (period <= Millis{0}) fail(ErrorCode::InvalidInput, "delay-wave: period must be positive");
  if (replicates == 0) fail(ErrorCode::InvalidInput, "delay-wave: replicates must be >= 1");
  if (method != Form::Seq && method != Form::Wave) {
    fail(ErrorCode::InvalidInput, "delay-wave: method must be seq or wave");
  }

  const double k = std::numbers::pi / (2.0 * static_cast<double>(n - 1));
  const double v = 2.0 * std::numbers::pi / static_cast<double>(period.count());
  const Millis horizon = period * static_cast<long>(replicates + 1);

  RobotConfig config;
  config.n_modules = n;
  const CodecConfig codec{n, config.motor.stroke_mm};
  std::vector<Frame> frames;
  Timeline plan;
  if (method == Form::Wave) {
    // f in [-1, 1] spans the full stroke.
    config.motor.input_offset = 0.5;
    config.motor.input_gain = 0.5;
    config.initial_level = 0.0;
    for (Millis t{0}; t < horizon; t += t_msg) {
      const double vt = v * static_cast<double>(t.count());
      frames.push_back(encode_term(WavePair{k, std::cos(vt), -std::sin(vt)}, codec));
    }
    plan = schedule(frames, {t_msg, BusMode::Broadcast}, Millis{0});
  } else {
    config.initial_level = 0.5;
    const Millis sweep = static_cast<long>(n) * t_msg;
    for (Millis s{0}; s < horizon; s += sweep) {
      const double vt = v * static_cast<double>(s.count());
      for (std::size_t m = 0; m < n; ++m) {
        const double f = std::sin(k * static_cast<double>(m) - vt);
        frames.push_back(encode_seq_ref(static_cast<int>(m), codec.stroke_mm * (0.5 + 0.5 * f), codec));
      }
    }
    plan = schedule(frames, {t_msg, BusMode::Sequential}, Millis{0});
  }
  const auto traces = run_robot(config, plan, horizon);

  std::vector<double> taus;
  const auto len = static_cast<std::size_t>(period.count());
  for (std::size_t r = 0; r < replicates; ++r) {
    const std::size_t begin = len * (r + 1);
    taus.push_back(xcorr_delay(window(traces.front().position, begin, len),
                               window(traces.back().position, begin, len), 1.0, len / 2));
  }
  DelayResult out{n, t_msg, method, mean(taus), static_cast<double>(period.count()) / 4.0, replicates};
  if (method == Form::Seq) out.tau_predicted_ms += static_cast<double>((n - 1) * t_msg.count());
  return out;
}

std::vector<DelayResult> run_delay_grid(const DelayGrid& grid) {
  struct Cell {
    Form method;
    std::size_t n;
    Millis t_msg;
  };
  std::vector<Cell> cells;
  for (Form m : grid.methods) {
    for (std::size_t n : grid.ns) {
      for (Millis t : grid.t_msgs) cells.push_back({m, n, t});
    }
  }
  std::vector<DelayResult> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        const Cell& c = cells[i];
        results[i] = grid.wave ? run_delay_wave(c.n, c.t_msg, c.method, grid.period, grid.replicates)
                               : run_delay_binary(c.n, c.t_msg, c.method, grid.replicates);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned threads = grid.threads ? grid.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(cells.size(), 1)));
  std::vector<std::jthread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

// ---------------------------------------------------------------------------

namespace {

struct ScanPoint {
  double simulated = 0.0;
  double predicted = 0.0;
};

bool settled(const Robot& robot, Millis window, double band) {
  const auto w = static_cast<std::size_t>(window.count());
  for (const auto& trace : robot.traces()) {
    if (trace.position.size() < w) return false;
    const auto first = trace.position.end() - static_cast<std::ptrdiff_t>(w);
    const auto [lo, hi] = std::minmax_element(first, trace.position.end());
    if (*hi - *lo > band) return false;
  }
  return true;
}

// One scan point: terms sent back to back, the first with the restart flag
// when `restart` is set.
struct ScanStep {
  std::vector<Term> terms;
  bool restart = false;
};

std::vector<ScanPoint> scan_once(const ShapeExperiment& ex, const std::vector<ScanStep>& steps,
                                 const std::vector<double>& target_mm, std::uint64_t noise_seed) {
  const std::size_t n = target_mm.size();
  RobotConfig config;
  config.n_modules = n;
  config.cols = 4;
  config.motor = ex.motor;
  config.initial_level = 0.5;
  config.noise_sigma_mm = ex.noise_sigma_mm;
  config.noise_seed = noise_seed;
  const CodecConfig codec{n, ex.motor.stroke_mm};
  Robot robot(config);
  const std::vector<double> initial(n, 0.5 * ex.motor.stroke_mm);

  std::vector<ScanPoint> out;
  out.push_back({1.0, 1.0});
  for (const ScanStep& step : steps) {
    for (std::size_t i = 0; i < step.terms.size(); ++i) {
      const Term& term = step.terms[i];
      const bool restart = step.restart && i == 0;
      if (const auto* s = std::get_if<SeqRef>(&term)) {
        if (ex.quantized) {
          robot.deliver(s->module, encode_seq_ref(s->module, s->height, codec));
        } else {
          robot.apply(s->module, term, false);
        }
      } else if (ex.quantized) {
        robot.deliver(BusEvent{robot.now(), robot.now(), encode_term(term, codec, restart), std::nullopt});
      } else {
        robot.apply_all(term, restart);
      }
    }

    std::vector<double> commanded(n);
    for (std::size_t m = 0; m < n; ++m) commanded[m] = target_height_mm(robot.modules()[m], ex.motor);

    const Millis start = robot.now();
    do {
      robot.tick();
    } while (robot.now() - start < ex.settle_timeout &&
             (robot.now() - start < ex.settle_window || !settled(robot, ex.settle_window, ex.settle_band_mm)));

    out.push_back({relative_error(robot.reported_positions(), target_mm, initial),
                   relative_error(commanded, target_mm, initial)});
  }
  return out;
}

}  // namespace

ErrorCurve run_shape_experiment(const ShapeExperiment& ex) {
  if (ex.replicates == 0) fail(ErrorCode::InvalidInput, "shapes: replicates must be >= 1");
  validate(ex.motor);
  const ShapeGrid grid = scale_to_stroke(builtin_shape(ex.shape, ex.seed), ex.motor.stroke_mm);
  const std::vector<double> target_mm = flatten(grid);
  std::vector<double> target_f(target_mm.size());
  for (std::size_t i = 0; i < target_mm.size(); ++i) target_f[i] = target_mm[i] / ex.motor.stroke_mm;

  // SEQ and DCT add one term per point. MP point k re-sends the whole
  // k-atom set after k pursuit iterations, since refitting moves earlier atoms.
  std::vector<ScanStep> steps;
  auto one_per_step = [&](const ApproxPlan& plan) {
    for (std::size_t i = 0; i < std::min(plan.terms.size(), ex.max_terms); ++i) {
      steps.push_back({{plan.terms[i]}, i == 0});
    }
  };
  switch (ex.method) {
    case Form::Seq: one_per_step(make_seq_plan(target_mm, 0.5 * ex.motor.stroke_mm)); break;
    case Form::Dct: one_per_step(make_dct_plan(target_f)); break;
    case Form::Mp: {
      MpOptions opts = ex.mp;
      opts.max_terms = std::min(opts.max_terms, ex.max_terms);
      for (const auto& atoms : mp_decompose(target_f, opts).history) {
        steps.push_back({std::vector<Term>(atoms.begin(), atoms.end()), true});
      }
      break;
    }
    default: fail(ErrorCode::InvalidInput, "shapes: method must be seq, dct or mp");
  }

  // Without noise every replicate is identical.
  const std::size_t runs = ex.noise_sigma_mm > 0.0 ? ex.replicates : 1;
  std::vector<ScanPoint> sum;
  for (std::size_t r = 0; r < runs; ++r) {
    const auto scan = scan_once(ex, steps, target_mm, ex.seed * 1000003u + r);
    if (sum.empty()) sum.assign(scan.size(), {});
    for (std::size_t i = 0; i < scan.size(); ++i) {
      sum[i].simulated += scan[i].simulated;
      sum[i].predicted += scan[i].predicted;
    }
  }
  ErrorCurve curve{std::string(builtin_shape_name(ex.shape)), ex.method, ex.quantized, {}};
  for (std::size_t i = 0; i < sum.size(); ++i) {
    curve.points.push_back({i, sum[i].simulated / static_cast<double>(runs),
                            sum[i].predicted / static_cast<double>(runs)});
  }
  return curve;
}

// ---------------------------------------------------------------------------

TrajectoryScript rectangle_script(double x0, double y0, double width_mm, double height_mm, double pitch_mm) {
  if (!(pitch_mm > 0.0)) fail(ErrorCode::InvalidInput, "rectangle: pitch must be positive");
  const double w = width_mm / pitch_mm;
  const double h = height_mm / pitch_mm;
  TrajectoryScript script;
  script.waypoints = {{x0, y0}, {x0 + w, y0}, {x0 + w, y0 + h}, {x0, y0 + h}};
  script.closed = true;
  script.pitch_mm = pitch_mm;
  return script;
}

ManipulationResult run_manipulation(const TrajectoryScript& script, std::size_t n_cols, std::size_t n_rows) {
  if (!(script.rate_hz > 0.0)) fail(ErrorCode::InvalidInput, "manipulate: rate must be positive");
  if (script.duration <= Millis{0}) fail(ErrorCode::InvalidInput, "manipulate: duration must be positive");
  if (script.waypoints.empty()) fail(ErrorCode::InvalidInput, "manipulate: no waypoints");
  if (!(script.sigma > 0.0)) fail(ErrorCode::InvalidInput, "manipulate: sigma must be positive");
  if (!(script.pitch_mm > 0.0)) fail(ErrorCode::InvalidInput, "manipulate: pitch must be positive");
  if (n_cols == 0 || n_rows == 0) fail(ErrorCode::InvalidInput, "manipulate: empty module grid");

  std::vector<std::pair<double, double>> path = script.waypoints;
  if (script.closed && path.size() > 1) path.push_back(path.front());
  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < path.size(); ++i) {
    cumulative.push_back(cumulative.back() + std::hypot(path[i].first - path[i - 1].first,
                                                        path[i].second - path[i - 1].second));
  }
  const double length = cumulative.back();
  const double duration_ms = static_cast<double>(script.duration.count());

  auto center_at = [&](double t_ms) -> std::pair<double, double> {
    if (length == 0.0) return path.front();
    const double s = std::clamp(length * t_ms / duration_ms, 0.0, length);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    const std::size_t seg = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), path.size() - 1);
    const double seg_len = cumulative[seg] - cumulative[seg - 1];
    const double u = seg_len > 0.0 ? (s - cumulative[seg - 1]) / seg_len : 0.0;
    return {path[seg - 1].first + u * (path[seg].first - path[seg - 1].first),
            path[seg - 1].second + u * (path[seg].second - path[seg - 1].second)};
  };

  RobotConfig config;
  config.n_modules = n_cols * n_rows;
  config.cols = n_cols;
  config.initial_level = 0.0;
  const CodecConfig codec{config.n_modules, config.motor.stroke_mm};
  Robot robot(config);

  ManipulationResult out;
  out.n_cols = n_cols;
  out.n_rows = n_rows;
  const auto ticks = static_cast<std::size_t>(std::llround(duration_ms * script.rate_hz / 1000.0));
  const double tick_ms = 1000.0 / script.rate_hz;
  for (std::size_t i = 0; i < ticks; ++i) {
    ManipulationTick tick;
    tick.time_ms = static_cast<double>(i) * tick_ms;
    std::tie(tick.center_x, tick.center_y) = center_at(tick.time_ms);
    const Frame frame =
        encode_term(RbfTerm{script.amplitude, script.sigma, tick.center_x, tick.center_y}, codec, true);
    robot.deliver(BusEvent{Millis(std::llround(tick.time_ms)), Millis(std::llround(tick.time_ms)), frame,
                           std::nullopt});
    tick.frames = 1;
    for (const auto& s : robot.modules()) tick.targets.push_back(s.target_f);
    out.total_frames += tick.frames;
    out.ticks.push_back(std::move(tick));
  }

  // Commanded path length from tick to tick, closing at t = duration.
  double travelled = 0.0;
  for (std::size_t i = 0; i < out.ticks.size(); ++i) {
    const auto [nx, ny] = i + 1 < out.ticks.size()
                              ? std::pair{out.ticks[i + 1].center_x, out.ticks[i + 1].center_y}
                              : center_at(duration_ms);
    travelled += std::hypot(nx - out.ticks[i].center_x, ny - out.ticks[i].center_y);
  }
  out.path_length_mm = travelled * script.pitch_mm;
  out.duration_ms = static_cast<double>(ticks) * tick_ms;
  out.mean_speed_mm_s = out.duration_ms > 0.0 ? out.path_length_mm / (out.duration_ms / 1000.0) : 0.0;
  return out;
}

// ---------------------------------------------------------------------------

std::string to_csv(std::span<const DelayResult> results) {
  std::ostringstream os;
  os << "n,t_msg_ms,method,tau_ms,tau_pred_ms,replicates\n";
  for (const auto& r : results) {
    os << r.n << ',' << r.t_msg.count() << ',' << form_name(r.method) << ',' << fmt(r.tau_measured_ms) << ','
       << fmt(r.tau_predicted_ms) << ',' << r.replicates << '\n';
  }
  return os.str();
}

std::string to_csv(std::span<const ErrorCurve> curves) {
  std::ostringstream os;
  os << "shape,method,quantized,terms_used,rel_error,predicted_error\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      os << c.shape_name << ',' << form_name(c.method) << ',' << (c.quantized ? 1 : 0) << ',' << p.terms_used
         << ',' << fmt(p.rel_error) << ',' << fmt(p.predicted_error) << '\n';
    }
  }
  return os.str();
}

std::string to_csv(const ErrorCurve& curve) { return to_csv(std::span<const ErrorCurve>(&curve, 1)); }

std::string to_csv(const ManipulationResult& result) {
  std::ostringstream os;
  const std::size_t n = result.n_cols * result.n_rows;
  os << "tick,time_ms,center_x,center_y,frames,argmax";
  for (std::size_t m = 0; m < n; ++m) os << ",f_" << m;
  os << '\n';
  for (std::size_t i = 0; i < result.ticks.size(); ++i) {
    const auto& t = result.ticks[i];
    const auto argmax = std::max_element(t.targets.begin(), t.targets.end()) - t.targets.begin();
    os << i << ',' << fmt(t.time_ms) << ',' << fmt(t.center_x) << ',' << fmt(t.center_y) << ',' << t.frames
       << ',' << argmax;
    for (double f : t.targets) os << ',' << fmt(f);
    os << '\n';
  }
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text << std::flush;
    if (!std::cout) fail(ErrorCode::Io, "write to stdout failed");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) fail(ErrorCode::Io, "write to '" + path + "' failed");
}

void emit_csv(std::span<const DelayResult> results, const std::string& path) {
  write_file(path, to_csv(results));
}

void emit_csv(std::span<const ErrorCurve> curves, const std::string& path) { write_file(path, to_csv(curves)); }

void emit_csv(const ManipulationResult& result, const std::string& path) { write_file(path, to_csv(result)); }

}  // namespace pinsurf

// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pinsurf/harness.hpp"

using namespace pinsurf;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail << " first failure: " << what << ";";
    ok = ok && cond;
  }
};

int failures = 0;

void criterion(int id, const char* title, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail << " exception: " << e.what() << ";";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s criterion %d: %s (%.2f s)%s\n", c.ok ? "PASS" : "FAIL", id, title, secs, c.detail.str().c_str());
  std::fflush(stdout);
  if (!c.ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

void delay_no_dynamics(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  DelayGrid g;
  g.ns = {2, 4, 8, 16};
  g.t_msgs = {Millis{5}, Millis{10}, Millis{20}};
  g.methods = {Form::Dct, Form::Seq};
  const auto rs = run_delay_grid(g);
  c.expect(rs.size() == 24, "24 cells");
  double worst_b = 0, worst_s = 0;
  for (const auto& r : rs) {
    const double tmsg = static_cast<double>(r.t_msg.count());
    if (r.method == Form::Dct) {
      worst_b = std::max(worst_b, std::abs(r.tau_measured_ms));
      c.expect(std::abs(r.tau_measured_ms) <= 1.0, fmt("broadcast n=%g t=%g tau=%g", r.n, tmsg, r.tau_measured_ms));
    } else {
      const double want = (static_cast<double>(r.n) - 1) * tmsg;
      worst_s = std::max(worst_s, std::abs(r.tau_measured_ms - want));
      c.expect(std::abs(r.tau_measured_ms - want) <= 1.0, fmt("seq n=%g t=%g tau=%g", r.n, tmsg, r.tau_measured_ms));
    }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime < 10 s");
  c.detail << fmt(" max |tau_bcast|=%.3f ms, max seq deviation=%.3f ms;", worst_b, worst_s);
}

void delay_dynamics(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  DelayGrid g;
  g.wave = true;
  g.ns = {2, 4, 6, 8, 10, 12, 14, 16};
  g.t_msgs = {Millis{5}};
  g.methods = {Form::Wave, Form::Seq};
  g.replicates = 6;
  g.period = Millis{3000};
  const auto rs = run_delay_grid(g);
  double worst = 0;
  for (const auto& r : rs) {
    const double want = r.method == Form::Wave ? 750.0 : 750.0 + 5.0 * (static_cast<double>(r.n) - 1);
    const double rel = std::abs(r.tau_measured_ms - want) / want;
    worst = std::max(worst, rel);
    c.expect(rel <= 0.02, fmt("n=%g tau=%g want=%g", r.n, r.tau_measured_ms, want));
  }
  c.expect(seconds_since(t0) < 60.0, "runtime < 60 s");
  c.detail << fmt(" worst relative deviation=%.2f%%;", 100 * worst);
}

ErrorCurve curve(BuiltinShape s, Form m, bool q) {
  ShapeExperiment ex;
  ex.shape = s;
  ex.method = m;
  ex.quantized = q;
  return run_shape_experiment(ex);
}

std::size_t first_below(const ErrorCurve& c, double level) {
  for (const auto& p : c.points) {
    if (p.rel_error <= level) return p.terms_used;
  }
  return 999;
}

void shape_milestones(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ErrorCurve> all;
  for (auto s : all_builtin_shapes()) {
    for (Form m : {Form::Seq, Form::Dct, Form::Mp}) all.push_back(curve(s, m, false));
  }
  auto find = [&](BuiltinShape s, Form m) -> const ErrorCurve& {
    for (const auto& e : all) {
      if (e.shape_name == builtin_shape_name(s) && e.method == m) return e;
    }
    throw std::runtime_error("missing curve");
  };
  const auto& peak_mp = find(BuiltinShape::Peak, Form::Mp);
  c.expect(peak_mp.points.size() > 1 && peak_mp.points[1].rel_error < 0.01, "peak MP < 1% at 1 term");
  const auto& peak_dct = find(BuiltinShape::Peak, Form::Dct);
  c.expect(first_below(peak_dct, 0.01) == 16, "peak DCT < 1% first at 16 terms");
  const auto seq = first_below(find(BuiltinShape::Parabola, Form::Seq), 0.2);
  const auto mp = first_below(find(BuiltinShape::Parabola, Form::Mp), 0.2);
  const auto dct = first_below(find(BuiltinShape::Parabola, Form::Dct), 0.2);
  c.expect(seq <= 11, "parabola SEQ <= 11");
  c.expect(mp <= 6, "parabola MP <= 6");
  c.expect(dct <= 7, "parabola DCT <= 7");
  c.expect(seconds_since(t0) < 120.0, "runtime < 120 s");
  c.detail << fmt(" peak MP@1=%.2e, parabola <=20%% at SEQ %g / MP %g", peak_mp.points[1].rel_error,
                  static_cast<double>(seq), static_cast<double>(mp))
           << " / DCT " << dct << " terms;";
}

void quantization(Check& c) {
  for (auto s : {BuiltinShape::Parabola, BuiltinShape::Checkers, BuiltinShape::Random}) {
    const auto exact = curve(s, Form::Mp, false);
    const auto quant = curve(s, Form::Mp, true);
    const std::string name(builtin_shape_name(s));
    c.expect(exact.points.back().predicted_error < 1e-6, name + " unquantized < 1e-6");
    c.expect(quant.points.back().predicted_error > 1e-3, name + " quantized floor");
    c.expect(quant.points.size() == exact.points.size(), name + " curve lengths");
    for (std::size_t i = 0; i < std::min(quant.points.size(), exact.points.size()); ++i) {
      c.expect(quant.points[i].predicted_error >= exact.points[i].predicted_error - 1e-12,
               name + " quantized >= unquantized at " + std::to_string(i));
    }
    c.detail << " " << name << fmt(" floor %.3g vs %.1e;", quant.points.back().predicted_error,
                                   exact.points.back().predicted_error);
  }
}

void properties(Check& c) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  double dct_err = 0;
  for (std::size_t n = 1; n <= 64; ++n) {
    std::vector<double> f(n);
    for (auto& v : f) v = u(rng);
    const auto terms = dct_forward(f);
    for (std::size_t x = 0; x < n; ++x) {
      dct_err = std::max(dct_err, std::abs(dct_eval(terms, static_cast<int>(x), n) - f[x]));
    }
  }
  c.expect(dct_err <= 1e-9, "DCT round trip");

  for (const auto s : all_builtin_shapes()) {
    const auto d = mp_decompose(flatten(builtin_shape(s, 7)), MpOptions{});
    for (std::size_t i = 1; i < d.residual_norms.size(); ++i) {
      c.expect(d.residual_norms[i] <= d.residual_norms[i - 1] + 1e-12, "MP residual monotone");
    }
  }
  const MpAtom atom{0.7, 4.0, 5.0, 2.0, 1.0};
  std::vector<double> single(16);
  for (std::size_t x = 0; x < 16; ++x) single[x] = atom_eval(atom, static_cast<double>(x), 16);
  const auto one = mp_decompose(single, MpOptions{.max_terms = 1});
  c.expect(one.residual_norms.back() <= 1e-9 * one.residual_norms.front(), "single atom recovery");

  const CodecConfig codec;
  const auto q = quant_table(codec);
  bool frame_ok = true;
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng), b = u(rng);
    const WavePair w{std::abs(a) * 3.0, a, b};
    const auto back = std::get<WavePair>(decode_frame(encode_term(w, codec), codec));
    frame_ok = frame_ok && std::abs(back.cos_amp - a) <= q.wave_amplitude.step() / 2 + 1e-12 &&
               std::abs(back.sin_amp - b) <= q.wave_amplitude.step() / 2 + 1e-12 &&
               std::abs(back.wavevector - w.wavevector) <= q.wave_wavevector.step() / 2 + 1e-12;
    const DctTerm d{i % 16, a * 2.0};
    const auto dback = std::get<DctTerm>(decode_frame(encode_term(d, codec), codec));
    frame_ok = frame_ok && dback.index == d.index &&
               std::abs(dback.amplitude - d.amplitude) <= q.dct_amplitude.step() / 2 + 1e-12;
  }
  c.expect(frame_ok, "frame round trip within half a step");

  const MotorParams motor;
  bool bounds = true;
  std::uniform_real_distribution<double> tgt(-0.5, 1.5);
  for (int rep = 0; rep < 20; ++rep) {
    ModuleState s;
    s.position = 35.0;
    for (int k = 0; k < 300; ++k) {
      if (k % 15 == 0) s.target_f = tgt(rng);
      const double before = s.position;
      s = pid_step(s, motor);
      for (int ms = 0; ms < 16; ++ms) s = advance(s, motor, Millis{1});
      bounds = bounds && s.position >= 0.0 && s.position <= 70.0 && std::abs(s.position - before) <= 2.0 + 1e-9;
    }
  }
  c.expect(bounds, "position in [0, 70] and <= 2 mm per period");

  RobotConfig cfg;
  cfg.n_modules = 16;
  cfg.initial_level = 0.0;
  const Frame frames[] = {encode_term(DctTerm{0, 1.0}, cfg.codec, true)};
  const auto traces = run_robot(cfg, schedule(frames, {Millis{5}, BusMode::Broadcast}, Millis{10}), Millis{40});
  bool simultaneous = true;
  for (const auto& t : traces) simultaneous = simultaneous && t.target_f[9] == 0.0 && t.target_f[10] > 0.99;
  c.expect(simultaneous, "broadcast simultaneity");
  c.detail << fmt(" DCT max error %.1e;", dct_err);
}

void manipulation(Check& c) {
  const auto script = rectangle_script(0.1, 0.5, 60.0, 40.0);
  const double tick_ms = 1000.0 / script.rate_hz;
  for (std::size_t side : {2, 4, 8, 16}) {
    const auto r = run_manipulation(script, side, side);
    c.expect(std::abs(r.duration_ms - 2000.0) <= tick_ms, "duration 2.0 s +- 1 tick");
    c.expect(std::abs(r.path_length_mm - 200.0) <= 1e-6, "20 cm path");
    c.expect(std::abs(r.mean_speed_mm_s - 100.0) <= 2.0, "mean speed 10 cm/s +- 2%");
    c.expect(r.total_frames == r.ticks.size(), "one frame per tick");
    for (const auto& t : r.ticks) c.expect(t.frames == 1, "one frame per tick");
    if (side == 4) {
      c.detail << fmt(" %g ticks, %.1f ms, %.2f mm/s;", static_cast<double>(r.ticks.size()), r.duration_ms,
                      r.mean_speed_mm_s);
    }
  }
}

}  // namespace

int main() {
  criterion(1, "delay scaling without dynamics", delay_no_dynamics);
  criterion(2, "delay scaling with dynamics", delay_dynamics);
  criterion(3, "shape error milestones", shape_milestones);
  criterion(4, "quantization floor", quantization);
  criterion(5, "property suites", properties);
  criterion(6, "manipulation scripting", manipulation);
  std::printf("%d of 6 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

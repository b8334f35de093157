#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pinsurf/harness.hpp"
#include "test_util.hpp"

using namespace pinsurf;
using pinsurf::test::error_of;

namespace {

std::vector<double> noise_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> raw(n + 40), out(n);
  for (auto& v : raw) v = g(rng);
  // Smooth so the correlation peak is wider than one sample.
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 8; ++j) s += raw[i + j];
    out[i] = s;
  }
  return out;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST_CASE("xcorr of identical traces is zero") {
  const auto a = noise_signal(500, 1);
  CHECK(std::abs(xcorr_delay(a, a)) < 1e-9);
}

TEST_CASE("xcorr recovers a constructed 50 ms shift") {
  const auto base = noise_signal(1100, 2);
  const std::vector<double> a(base.begin() + 50, base.begin() + 1050);
  const std::vector<double> b(base.begin(), base.begin() + 1000);
  CHECK(xcorr_delay(a, b, 1.0) == doctest::Approx(50.0).epsilon(0.01));
  CHECK(std::abs(xcorr_delay(a, b, 1.0) - 50.0) <= 0.5);
  CHECK(xcorr_delay(a, b, 2.0) == doctest::Approx(2 * xcorr_delay(a, b, 1.0)));
}

TEST_CASE("xcorr interpolates sub-sample shifts of a smooth signal") {
  std::vector<double> a(2000), b(2000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::sin(2 * std::numbers::pi * i / 400.0);
    b[i] = std::sin(2 * std::numbers::pi * (i - 10.3) / 400.0);
  }
  CHECK(xcorr_delay(a, b, 1.0, 150) == doctest::Approx(10.3).epsilon(0.005));
}

TEST_CASE("xcorr is antisymmetric") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto base = noise_signal(900, seed);
    const std::size_t shift = seed % 7 * 3;
    const std::vector<double> a(base.begin() + shift, base.begin() + 800 + shift);
    const std::vector<double> b(base.begin(), base.begin() + 800);
    CHECK(xcorr_delay(a, b) == doctest::Approx(-xcorr_delay(b, a)).epsilon(0).scale(1).epsilon(1e-9));
    CHECK(std::abs(xcorr_delay(a, b) + xcorr_delay(b, a)) <= 0.5);
  }
}

TEST_CASE("xcorr errors") {
  const std::vector<double> flat(100, 1.0);
  const auto a = noise_signal(100, 3);
  CHECK(error_of([&] { xcorr_delay(flat, a); }) == ErrorCode::DegenerateSignal);
  CHECK(error_of([&] { xcorr_delay(a, flat); }) == ErrorCode::DegenerateSignal);
  CHECK(error_of([&] { xcorr_delay(a, std::vector<double>(a.begin(), a.end() - 1)); }) == ErrorCode::InvalidInput);
  CHECK(error_of([] { xcorr_delay(std::vector<double>{1.0}, std::vector<double>{1.0}); }) == ErrorCode::InvalidInput);
}

TEST_CASE("binary delay oracles") {
  const auto b = run_delay_binary(16, Millis{5}, Form::Dct, 20);
  CHECK(std::abs(b.tau_measured_ms) <= 1.0);
  CHECK(b.tau_predicted_ms == 0.0);
  CHECK(b.replicates == 20);
  const auto s = run_delay_binary(16, Millis{5}, Form::Seq, 20);
  CHECK(s.tau_predicted_ms == 75.0);
  CHECK(std::abs(s.tau_measured_ms - 75.0) <= 1.0);
  CHECK(run_delay_binary(2, Millis{10}, Form::Seq, 3).tau_measured_ms == doctest::Approx(10.0).epsilon(0.001));
  CHECK(std::abs(run_delay_binary(8, Millis{20}, Form::Wave, 3).tau_measured_ms) <= 1.0);
  CHECK(error_of([] { run_delay_binary(1, Millis{5}, Form::Seq, 1); }) == ErrorCode::InvalidInput);
  CHECK(error_of([] { run_delay_binary(4, Millis{5}, Form::Mp, 1); }) == ErrorCode::InvalidInput);
}

TEST_CASE("scaling law: broadcast flat, sequential slope equals t_msg") {
  DelayGrid grid;
  grid.ns = {2, 4, 8, 16};
  grid.t_msgs = {Millis{5}, Millis{10}, Millis{20}};
  grid.methods = {Form::Dct, Form::Seq};
  grid.replicates = 5;
  const auto results = run_delay_grid(grid);
  REQUIRE(results.size() == 24);
  for (Form m : grid.methods) {
    for (Millis t : grid.t_msgs) {
      std::vector<double> xs, ys;
      for (const auto& r : results) {
        if (r.method == m && r.t_msg == t) {
          xs.push_back(static_cast<double>(r.n));
          ys.push_back(r.tau_measured_ms);
        }
      }
      REQUIRE(xs.size() == 4);
      const double k = slope(xs, ys);
      if (m == Form::Dct) {
        CHECK(std::abs(k) < 1.0);
      } else {
        CHECK(k == doctest::Approx(static_cast<double>(t.count())).epsilon(0.05));
      }
    }
  }
  // Results come back in method, n, t_msg order regardless of threading.
  CHECK(results[0].method == Form::Dct);
  CHECK(results[0].n == 2);
  CHECK(results[1].t_msg == Millis{10});
  CHECK(results[12].method == Form::Seq);
}

TEST_CASE("travelling wave delay") {
  const auto b = run_delay_wave(16, Millis{5}, Form::Wave, Millis{3000}, 6);
  CHECK(b.tau_predicted_ms == 750.0);
  CHECK(b.tau_measured_ms == doctest::Approx(750.0).epsilon(0.02));
  const auto s = run_delay_wave(16, Millis{5}, Form::Seq, Millis{3000}, 6);
  CHECK(s.tau_predicted_ms == 825.0);
  CHECK(s.tau_measured_ms == doctest::Approx(825.0).epsilon(0.02));
  const double diff = run_delay_wave(2, Millis{5}, Form::Seq, Millis{3000}, 6).tau_measured_ms -
                      run_delay_wave(2, Millis{5}, Form::Wave, Millis{3000}, 6).tau_measured_ms;
  CHECK(diff == doctest::Approx(5.0).epsilon(0).scale(1).epsilon(0.4));
  CHECK(std::abs(diff - 5.0) <= 2.0);
  CHECK(error_of([] { run_delay_wave(4, Millis{5}, Form::Dct, Millis{3000}); }) == ErrorCode::InvalidInput);
  CHECK(error_of([] { run_delay_wave(4, Millis{5}, Form::Wave, Millis{0}); }) == ErrorCode::InvalidInput);
}

TEST_CASE("shape experiment milestones") {
  auto curve = [](BuiltinShape s, Form m, bool q = false) {
    ShapeExperiment ex;
    ex.shape = s;
    ex.method = m;
    ex.quantized = q;
    return run_shape_experiment(ex);
  };
  const auto peak_mp = curve(BuiltinShape::Peak, Form::Mp);
  REQUIRE(peak_mp.points.size() >= 2);
  CHECK(peak_mp.points[0].terms_used == 0);
  CHECK(peak_mp.points[0].rel_error == 1.0);
  CHECK(peak_mp.points[1].rel_error < 0.01);

  const auto peak_dct = curve(BuiltinShape::Peak, Form::Dct);
  REQUIRE(peak_dct.points.size() == 17);
  for (std::size_t i = 1; i < 16; ++i) CHECK(peak_dct.points[i].rel_error >= 0.01);
  CHECK(peak_dct.points[16].rel_error < 0.01);

  auto first_below = [](const ErrorCurve& c, double level) {
    for (const auto& p : c.points) {
      if (p.rel_error <= level) return p.terms_used;
    }
    return std::size_t{99};
  };
  CHECK(first_below(curve(BuiltinShape::Parabola, Form::Seq), 0.2) <= 11);
  CHECK(first_below(curve(BuiltinShape::Parabola, Form::Mp), 0.2) <= 6);
  CHECK(first_below(curve(BuiltinShape::Parabola, Form::Dct), 0.2) <= 7);
}

TEST_CASE("error curves are non-increasing and quantization only adds error") {
  for (auto s : {BuiltinShape::Parabola, BuiltinShape::Checkers, BuiltinShape::Random}) {
    for (Form m : {Form::Dct, Form::Mp}) {
      ShapeExperiment ex;
      ex.shape = s;
      ex.method = m;
      const auto exact = run_shape_experiment(ex);
      ex.quantized = true;
      const auto quant = run_shape_experiment(ex);
      CAPTURE(builtin_shape_name(s));
      CAPTURE(form_name(m));
      for (std::size_t i = 1; i < exact.points.size(); ++i) {
        CHECK(exact.points[i].terms_used == exact.points[i - 1].terms_used + 1);
        CHECK(exact.points[i].predicted_error <= exact.points[i - 1].predicted_error + 1e-12);
      }
      CHECK(exact.points.back().predicted_error < 1e-6);
      if (m == Form::Mp) {
        REQUIRE(quant.points.size() == exact.points.size());
        for (std::size_t i = 0; i < exact.points.size(); ++i) {
          CHECK(quant.points[i].predicted_error >= exact.points[i].predicted_error - 1e-12);
        }
        CHECK(quant.points.back().predicted_error > 1e-3);
      }
    }
  }
}

TEST_CASE("noisy shape experiment averages replicates") {
  ShapeExperiment ex;
  ex.shape = BuiltinShape::Plane;
  ex.method = Form::Dct;
  ex.noise_sigma_mm = 0.2;
  ex.replicates = 3;
  ex.max_terms = 4;
  const auto c = run_shape_experiment(ex);
  CHECK(c.points.size() == 5);
  CHECK(c.points[1].rel_error > 0.0);
  CHECK(to_csv(c) == to_csv(run_shape_experiment(ex)));
}

TEST_CASE("manipulation along a 20 cm rectangle") {
  const auto script = rectangle_script(0.1, 0.5, 60.0, 40.0);
  for (auto [cols, rows] : {std::pair{4, 4}, std::pair{8, 8}, std::pair{3, 5}}) {
    const auto r = run_manipulation(script, cols, rows);
    CHECK(r.ticks.size() == 120);
    CHECK(r.total_frames == r.ticks.size());
    for (const auto& t : r.ticks) CHECK(t.frames == 1);
    CHECK(r.duration_ms == doctest::Approx(2000.0));
    CHECK(r.path_length_mm == doctest::Approx(200.0));
    CHECK(r.mean_speed_mm_s == doctest::Approx(100.0).epsilon(0.02));
  }
}

TEST_CASE("the rendered peak tracks the nearest module") {
  const auto script = rectangle_script(0.1, 0.5, 60.0, 40.0);
  const auto r = run_manipulation(script, 4, 4);
  for (const auto& t : r.ticks) {
    double best = 1e9, second = 1e9;
    for (std::size_t m = 0; m < 16; ++m) {
      const double d = std::hypot(static_cast<double>(m % 4) - t.center_x, static_cast<double>(m / 4) - t.center_y);
      if (d < best) {
        second = best;
        best = d;
      } else if (d < second) {
        second = d;
      }
    }
    const auto argmax = std::max_element(t.targets.begin(), t.targets.end()) - t.targets.begin();
    const double d_arg = std::hypot(static_cast<double>(argmax % 4) - t.center_x,
                                    static_cast<double>(argmax / 4) - t.center_y);
    // Ties within the center's quantization step may go either way.
    CHECK(d_arg <= best + 2e-3);
  }
}

TEST_CASE("stationary center renders identical ticks") {
  TrajectoryScript s;
  s.waypoints = {{1.5, 2.0}};
  const auto r = run_manipulation(s, 4, 4);
  REQUIRE(r.ticks.size() == 120);
  for (const auto& t : r.ticks) CHECK(t.targets == r.ticks[0].targets);
  CHECK(r.path_length_mm == 0.0);
  TrajectoryScript bad = s;
  bad.rate_hz = 0.0;
  CHECK(error_of([&] { run_manipulation(bad, 4, 4); }) == ErrorCode::InvalidInput);
  CHECK(error_of([&] { run_manipulation(s, 0, 4); }) == ErrorCode::InvalidInput);
}

TEST_CASE("CSV formats") {
  const DelayResult rs[] = {{16, Millis{5}, Form::Seq, 74.99812345678, 75.0, 20}};
  CHECK(to_csv(rs) == "n,t_msg_ms,method,tau_ms,tau_pred_ms,replicates\n16,5,seq,74.9981235,75,20\n");
  ErrorCurve c{"peak", Form::Mp, true, {{0, 1.0, 1.0}, {1, 1.23456789012e-4, 0.0}}};
  CHECK(to_csv(c) ==
        "shape,method,quantized,terms_used,rel_error,predicted_error\npeak,mp,1,0,1,1\npeak,mp,1,1,0.000123456789,0\n");
  const auto m = run_manipulation(rectangle_script(0.1, 0.5, 60.0, 40.0), 2, 2);
  const auto text = to_csv(m);
  CHECK(text.rfind("tick,time_ms,center_x,center_y,frames,argmax,f_0,f_1,f_2,f_3\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 121);
}

TEST_CASE("CSV files are byte-identical across runs") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto p1 = (dir / "pinsurf_csv_a.csv").string();
  const auto p2 = (dir / "pinsurf_csv_b.csv").string();
  DelayGrid g;
  g.ns = {2, 8};
  g.t_msgs = {Millis{5}};
  g.methods = {Form::Seq, Form::Dct};
  g.replicates = 3;
  emit_csv(run_delay_grid(g), p1);
  g.threads = 1;
  emit_csv(run_delay_grid(g), p2);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(p1) == slurp(p2));
  CHECK_FALSE(slurp(p1).empty());
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
  CHECK(error_of([] { write_file("/nonexistent-dir/x.csv", "x"); }) == ErrorCode::Io);
}

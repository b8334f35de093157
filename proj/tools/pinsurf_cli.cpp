#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pinsurf/pinsurf.h"

namespace {

struct CliError {
  std::string message;
};

void check(pinsurf_status status) {
  if (status != PINSURF_OK) throw CliError{pinsurf_last_error()};
}

std::vector<pinsurf_method> parse_methods(const std::vector<std::string>& names) {
  std::vector<pinsurf_method> out;
  for (const auto& n : names) {
    pinsurf_method m{};
    check(pinsurf_method_parse(n.c_str(), &m));
    out.push_back(m);
  }
  return out;
}

// "-" sends the CSV to stdout.
template <class Writer>
void emit(const std::string& out, Writer&& write) {
  std::fflush(stdout);
  check(write(out.empty() ? "-" : out.c_str()));
}

struct DelayArgs {
  std::vector<std::size_t> ns;
  std::vector<int64_t> t_msgs{5};
  std::vector<std::string> methods;
  std::size_t replicates = 0;
  int64_t period_ms = 3000;
  unsigned threads = 0;
  std::string out;
};

void add_delay_options(CLI::App* cmd, DelayArgs& a) {
  cmd->add_option("--n", a.ns, "Module counts (comma separated)")->delimiter(',');
  cmd->add_option("--tmsg-ms", a.t_msgs, "Transmission periods in ms")->delimiter(',');
  cmd->add_option("--method", a.methods, "Methods: seq, dct, wave")->delimiter(',');
  cmd->add_option("--replicates", a.replicates, "Replicates per cell");
  cmd->add_option("--threads", a.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--out", a.out, "CSV output path (default stdout)");
}

void run_delay(DelayArgs a, bool wave) {
  if (a.ns.empty()) a.ns = {2, 4, 8, 16};
  if (a.methods.empty()) a.methods = wave ? std::vector<std::string>{"wave", "seq"} : std::vector<std::string>{"dct", "seq"};
  if (a.replicates == 0) a.replicates = wave ? 6 : 20;
  const auto methods = parse_methods(a.methods);
  pinsurf_delay_grid grid{};
  grid.wave = wave ? 1 : 0;
  grid.ns = a.ns.data();
  grid.n_ns = a.ns.size();
  grid.t_msgs_ms = a.t_msgs.data();
  grid.n_t_msgs = a.t_msgs.size();
  grid.methods = methods.data();
  grid.n_methods = methods.size();
  grid.replicates = a.replicates;
  grid.period_ms = a.period_ms;
  grid.threads = a.threads;
  std::vector<pinsurf_delay_result> results(a.ns.size() * a.t_msgs.size() * methods.size());
  std::size_t count = 0;
  check(pinsurf_delay_run_grid(&grid, results.data(), results.size(), &count));
  emit(a.out, [&](const char* path) { return pinsurf_delay_write_csv(results.data(), count, path); });
}

struct ShapeArgs {
  std::vector<std::string> shapes;
  std::vector<std::string> methods{"seq", "dct", "mp"};
  bool quantized = false;
  bool both = false;
  std::size_t terms = 16;
  std::size_t replicates = 6;
  uint64_t seed = 1;
  double noise_mm = 0.0;
  std::string out;
};

void run_shapes(const ShapeArgs& a) {
  std::vector<std::string> shapes = a.shapes;
  if (shapes.empty() || (shapes.size() == 1 && shapes[0] == "all")) {
    shapes.clear();
    for (std::size_t i = 0; i < pinsurf_shape_count(); ++i) shapes.emplace_back(pinsurf_shape_name(i));
  }
  const auto methods = parse_methods(a.methods);
  std::vector<int> quant_modes{a.quantized ? 1 : 0};
  if (a.both) quant_modes = {0, 1};

  std::vector<pinsurf_curve*> curves;
  try {
    for (const auto& shape : shapes) {
      for (pinsurf_method m : methods) {
        for (int q : quant_modes) {
          pinsurf_shape_options opts;
          pinsurf_shape_options_init(&opts);
          opts.shape = shape.c_str();
          opts.method = m;
          opts.quantized = q;
          opts.max_terms = a.terms;
          opts.replicates = a.replicates;
          opts.seed = a.seed;
          opts.noise_sigma_mm = a.noise_mm;
          pinsurf_curve* c = nullptr;
          check(pinsurf_shape_run(&opts, &c));
          curves.push_back(c);
        }
      }
    }
    emit(a.out, [&](const char* path) { return pinsurf_curves_write_csv(curves.data(), curves.size(), path); });
  } catch (...) {
    for (auto* c : curves) pinsurf_curve_free(c);
    throw;
  }
  for (auto* c : curves) pinsurf_curve_free(c);
}

struct ManipulateArgs {
  std::size_t cols = 4;
  std::size_t rows = 4;
  double x0 = 0.1;
  double y0 = 0.5;
  double width_mm = 60.0;
  double height_mm = 40.0;
  double rate_hz = 60.0;
  int64_t period_ms = 2000;
  double sigma = 1.0;
  double amplitude = 1.0;
  double pitch_mm = 21.25;
  std::string out;
};

void run_manipulate(const ManipulateArgs& a) {
  pinsurf_trajectory opts;
  pinsurf_trajectory_init(&opts);
  opts.rate_hz = a.rate_hz;
  opts.duration_ms = a.period_ms;
  opts.sigma = a.sigma;
  opts.amplitude = a.amplitude;
  opts.pitch_mm = a.pitch_mm;
  pinsurf_manipulation* run = nullptr;
  check(pinsurf_manipulation_run_rectangle(a.x0, a.y0, a.width_mm, a.height_mm, &opts, a.cols, a.rows, &run));
  pinsurf_manipulation_summary s{};
  const pinsurf_status st = pinsurf_manipulation_get_summary(run, &s);
  try {
    check(st);
    emit(a.out, [&](const char* path) { return pinsurf_manipulation_write_csv(run, path); });
  } catch (...) {
    pinsurf_manipulation_free(run);
    throw;
  }
  pinsurf_manipulation_free(run);
  std::fprintf(stderr, "ticks=%zu frames=%zu duration_ms=%.9g path_mm=%.9g mean_speed_mm_s=%.9g\n", s.ticks,
               s.total_frames, s.duration_ms, s.path_length_mm, s.mean_speed_mm_s);
}

struct EncodeArgs {
  std::string method = "dct";
  std::string hex;
  std::size_t n = 16;
  double stroke_mm = 70.0;
  bool restart = false;
  int index = 0;
  double amplitude = 0.0;
  double scale = 1.0;
  double position = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  double width = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double wavevector = 0.0;
  double cos_amp = 0.0;
  double sin_amp = 0.0;
  double height = 0.0;
};

void print_term(const pinsurf_term& t, int restart) {
  std::printf("method=%s restart=%d", pinsurf_method_name(t.method), restart);
  switch (t.method) {
    case PINSURF_METHOD_DCT: std::printf(" index=%d amplitude=%.9g", t.u.dct.index, t.u.dct.amplitude); break;
    case PINSURF_METHOD_MP:
      std::printf(" amplitude=%.9g scale=%.9g position=%.9g frequency=%.9g phase=%.9g", t.u.mp.amplitude,
                  t.u.mp.scale, t.u.mp.position, t.u.mp.frequency, t.u.mp.phase);
      break;
    case PINSURF_METHOD_RBF:
      std::printf(" amplitude=%.9g width=%.9g cx=%.9g cy=%.9g", t.u.rbf.amplitude, t.u.rbf.width,
                  t.u.rbf.center_x, t.u.rbf.center_y);
      break;
    case PINSURF_METHOD_WAVE:
      std::printf(" wavevector=%.9g cos=%.9g sin=%.9g", t.u.wave.wavevector, t.u.wave.cos_amp, t.u.wave.sin_amp);
      break;
    case PINSURF_METHOD_SEQ: std::printf(" module=%d height_mm=%.9g", t.u.seq.module, t.u.seq.height_mm); break;
  }
  std::printf("\n");
}

void run_encode(const EncodeArgs& a) {
  pinsurf_codec codec{a.n, a.stroke_mm};
  pinsurf_frame frame{};
  if (!a.hex.empty()) {
    check(pinsurf_frame_from_hex(a.hex.c_str(), &frame));
  } else {
    pinsurf_term t{};
    check(pinsurf_method_parse(a.method.c_str(), &t.method));
    switch (t.method) {
      case PINSURF_METHOD_DCT: t.u.dct = {a.index, a.amplitude}; break;
      case PINSURF_METHOD_MP: t.u.mp = {a.amplitude, a.scale, a.position, a.frequency, a.phase}; break;
      case PINSURF_METHOD_RBF: t.u.rbf = {a.amplitude, a.width, a.cx, a.cy}; break;
      case PINSURF_METHOD_WAVE: t.u.wave = {a.wavevector, a.cos_amp, a.sin_amp}; break;
      case PINSURF_METHOD_SEQ: t.u.seq = {a.index, a.height}; break;
    }
    check(pinsurf_encode(&t, &codec, a.restart ? 1 : 0, &frame));
  }
  char hex[64];
  check(pinsurf_frame_to_hex(&frame, hex, sizeof hex));
  pinsurf_term decoded{};
  int restart = 0;
  check(pinsurf_decode(&frame, &codec, &decoded, &restart));
  std::printf("frame=%s\n", hex);
  print_term(decoded, restart);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Broadcast shape control for pin-array robots"};
  app.require_subcommand(1);

  DelayArgs binary_args;
  auto* binary = app.add_subcommand("delay-binary", "Input delay of uniform toggles, broadcast vs sequential");
  add_delay_options(binary, binary_args);

  DelayArgs wave_args;
  auto* wave = app.add_subcommand("delay-wave", "Position delay of the travelling-wave test");
  add_delay_options(wave, wave_args);
  wave->add_option("--period-ms", wave_args.period_ms, "Wave period T in ms");

  ShapeArgs shape_args;
  auto* shapes = app.add_subcommand("shapes", "Relative error against number of transmitted terms");
  shapes->add_option("--shape", shape_args.shapes, "Shapes (comma separated, default all)")->delimiter(',');
  shapes->add_option("--method", shape_args.methods, "Methods: seq, dct, mp")->delimiter(',');
  shapes->add_flag("--quantized", shape_args.quantized, "Send terms through the wire format");
  shapes->add_flag("--both", shape_args.both, "Run quantized and unquantized");
  shapes->add_option("--terms", shape_args.terms, "Maximum number of terms");
  shapes->add_option("--replicates", shape_args.replicates, "Replicates (only differ with noise)");
  shapes->add_option("--seed", shape_args.seed, "Seed of the random shape");
  shapes->add_option("--noise-mm", shape_args.noise_mm, "Position measurement noise sigma");
  shapes->add_option("--out", shape_args.out, "CSV output path (default stdout)");

  ManipulateArgs man_args;
  auto* manipulate = app.add_subcommand("manipulate", "Move a Gaussian bump around a rectangle");
  manipulate->add_option("--cols", man_args.cols, "Module columns");
  manipulate->add_option("--rows", man_args.rows, "Module rows");
  manipulate->add_option("--x0", man_args.x0, "First corner x (module units)");
  manipulate->add_option("--y0", man_args.y0, "First corner y (module units)");
  manipulate->add_option("--width-mm", man_args.width_mm, "Rectangle width");
  manipulate->add_option("--height-mm", man_args.height_mm, "Rectangle height");
  manipulate->add_option("--rate-hz", man_args.rate_hz, "Frame rate");
  manipulate->add_option("--period-ms", man_args.period_ms, "Time for one lap");
  manipulate->add_option("--sigma", man_args.sigma, "Gaussian width (module units)");
  manipulate->add_option("--amplitude", man_args.amplitude, "Gaussian amplitude");
  manipulate->add_option("--pitch-mm", man_args.pitch_mm, "Module pitch");
  manipulate->add_option("--out", man_args.out, "CSV output path (default stdout)");

  EncodeArgs enc_args;
  auto* encode = app.add_subcommand("encode", "Encode one term, or decode --hex, and print the round trip");
  encode->add_option("--method", enc_args.method, "dct, mp, rbf, wave or seq");
  encode->add_option("--hex", enc_args.hex, "Frame to decode, e.g. '04|ff ff ...'");
  encode->add_option("--n", enc_args.n, "Number of modules N");
  encode->add_option("--stroke-mm", enc_args.stroke_mm, "Actuator stroke");
  encode->add_flag("--restart", enc_args.restart, "Set the restart flag");
  encode->add_option("--index", enc_args.index, "DCT index or SEQ module");
  encode->add_option("--amplitude", enc_args.amplitude, "Amplitude");
  encode->add_option("--scale", enc_args.scale, "MP scale");
  encode->add_option("--position", enc_args.position, "MP position");
  encode->add_option("--frequency", enc_args.frequency, "MP frequency");
  encode->add_option("--phase", enc_args.phase, "MP phase");
  encode->add_option("--width", enc_args.width, "RBF width");
  encode->add_option("--cx", enc_args.cx, "RBF center x");
  encode->add_option("--cy", enc_args.cy, "RBF center y");
  encode->add_option("--wavevector", enc_args.wavevector, "WAVE wave vector");
  encode->add_option("--cos", enc_args.cos_amp, "WAVE a");
  encode->add_option("--sin", enc_args.sin_amp, "WAVE b");
  encode->add_option("--height", enc_args.height, "SEQ height in mm");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*binary) run_delay(binary_args, false);
    if (*wave) run_delay(wave_args, true);
    if (*shapes) run_shapes(shape_args);
    if (*manipulate) run_manipulate(man_args);
    if (*encode) run_encode(enc_args);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return 1;
  }
  return 0;
}

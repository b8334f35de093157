#include "pinsurf/module_sim.hpp"

#include <algorithm>
#include <cmath>

#include "pinsurf/error.hpp"

namespace pinsurf {

ModuleId module_id_1d(int n) { return {n, static_cast<double>(n), 0.0}; }

ModuleId module_id_2d(int n, std::size_t cols) {
  if (cols == 0) fail(ErrorCode::InvalidInput, "module_id_2d: cols must be >= 1");
  const auto c = static_cast<int>(cols);
  return {n, static_cast<double>(n % c), static_cast<double>(n / c)};
}

void validate(const MotorParams& p) {
  if (!(p.max_speed_mm_s > 0.0)) fail(ErrorCode::InvalidInput, "motor: max_speed must be positive");
  if (!(p.stroke_mm > 0.0)) fail(ErrorCode::InvalidInput, "motor: stroke must be positive");
  if (p.pid_period <= Millis{0}) fail(ErrorCode::InvalidInput, "motor: pid_period must be positive");
}

double target_height_mm(const ModuleState& state, const MotorParams& params) {
  const double h = params.stroke_mm * (params.input_offset + params.input_gain * state.target_f);
  return std::clamp(h, 0.0, params.stroke_mm);
}

ModuleState apply_term(ModuleState state, const Term& term, bool restart, const CodecConfig& codec) {
  if (restart) state.target_f = 0.0;
  // Sequence-type forms (DCT, MP, WAVE) read the flattened index; RBF reads
  // the planar coordinates.
  const double seq_x = static_cast<double>(state.id.n);
  switch (form_of(term)) {
    case Form::Dct:
    case Form::Mp:
      state.target_f += term_eval(term, state.id.n, seq_x, state.id.y, codec.n_total);
      break;
    case Form::Rbf:
      state.target_f += term_eval(term, state.id.n, state.id.x, state.id.y, codec.n_total);
      break;
    case Form::Wave:
      state.target_f = term_eval(term, state.id.n, seq_x, state.id.y, codec.n_total);
      break;
    case Form::Seq: {
      const auto& ref = std::get<SeqRef>(term);
      if (ref.module == state.id.n) state.target_f = ref.height / codec.stroke_mm;
      break;
    }
  }
  if (!std::isfinite(state.target_f)) fail(ErrorCode::InvalidInput, "module: non-finite input");
  return state;
}

ModuleState on_frame(ModuleState state, const Frame& frame, const CodecConfig& codec) {
  if (frame.seq_id && *frame.seq_id != state.id.n && frame_form(frame) == Form::Seq) return state;
  return apply_term(std::move(state), decode_frame(frame, codec), frame_restart(frame), codec);
}

ModuleState reset_target(ModuleState state, double level) {
  if (!(level >= 0.0 && level <= 1.0)) fail(ErrorCode::InvalidInput, "reset_target: level outside [0, 1]");
  state.target_f = level;
  return state;
}

ModuleState pid_step(ModuleState state, const MotorParams& params) {
  const double dt = std::chrono::duration<double>(params.pid_period).count();
  const double error = target_height_mm(state, params) - state.position;
  const double derivative = state.has_prev_error ? (error - state.prev_error) / dt : 0.0;
  const double integrator = state.integrator + error * dt;

  const double command = params.kp * error + params.ki * integrator + params.kd * derivative;
  const double velocity = std::clamp(command, -params.max_speed_mm_s, params.max_speed_mm_s);
  const double next = state.position + velocity * dt;

  if (velocity == command && next >= 0.0 && next <= params.stroke_mm) state.integrator = integrator;
  state.velocity = velocity;
  state.prev_error = error;
  state.has_prev_error = true;
  return state;
}

ModuleState advance(ModuleState state, const MotorParams& params, Millis dt) {
  const double seconds = std::chrono::duration<double>(dt).count();
  state.position = std::clamp(state.position + state.velocity * seconds, 0.0, params.stroke_mm);
  return state;
}

// ---------------------------------------------------------------------------

Robot::Robot(RobotConfig config) : config_(std::move(config)), rng_(config_.noise_seed) {
  validate(config_.motor);
  if (config_.n_modules == 0) fail(ErrorCode::InvalidInput, "robot: needs at least one module");
  if (config_.codec.n_total != config_.n_modules) config_.codec.n_total = config_.n_modules;
  if (!(config_.initial_level >= 0.0 && config_.initial_level <= 1.0)) {
    fail(ErrorCode::InvalidInput, "robot: initial level outside [0, 1]");
  }
  modules_.resize(config_.n_modules);
  traces_.resize(config_.n_modules);
  for (std::size_t m = 0; m < modules_.size(); ++m) {
    const int n = static_cast<int>(m);
    ModuleState& s = modules_[m];
    s.id = config_.cols == 0 ? module_id_1d(n) : module_id_2d(n, config_.cols);
    s = reset_target(s, config_.initial_level);
    s.position = target_height_mm(s, config_.motor);
  }
}

void Robot::deliver(int module, const Frame& frame) {
  auto& s = modules_.at(static_cast<std::size_t>(module));
  s = on_frame(s, frame, config_.codec);
}

void Robot::deliver(const BusEvent& event) {
  if (event.recipient) {
    if (*event.recipient >= 0 && static_cast<std::size_t>(*event.recipient) < modules_.size()) {
      deliver(*event.recipient, event.frame);
    }
    return;
  }
  // Decode once; every module sees the same coefficients.
  const Term term = decode_frame(event.frame, config_.codec);
  const bool restart = frame_restart(event.frame);
  for (auto& s : modules_) s = apply_term(s, term, restart, config_.codec);
}

void Robot::apply(int module, const Term& term, bool restart) {
  auto& s = modules_.at(static_cast<std::size_t>(module));
  s = apply_term(s, term, restart, config_.codec);
}

void Robot::apply_all(const Term& term, bool restart) {
  for (auto& s : modules_) s = apply_term(s, term, restart, config_.codec);
}

void Robot::tick() {
  if (now_.count() % config_.motor.pid_period.count() == 0) {
    for (auto& s : modules_) s = pid_step(s, config_.motor);
  }
  for (auto& s : modules_) s = advance(s, config_.motor, Millis{1});
  record();
  ++now_;
}

void Robot::record() {
  for (std::size_t m = 0; m < modules_.size(); ++m) {
    double reported = modules_[m].position;
    if (config_.noise_sigma_mm > 0.0) reported += config_.noise_sigma_mm * noise_(rng_);
    traces_[m].target_f.push_back(modules_[m].target_f);
    traces_[m].position.push_back(modules_[m].position);
    traces_[m].reported.push_back(reported);
  }
}

std::vector<double> Robot::reported_positions() const {
  std::vector<double> out(modules_.size());
  for (std::size_t m = 0; m < modules_.size(); ++m) {
    out[m] = traces_[m].reported.empty() ? modules_[m].position : traces_[m].reported.back();
  }
  return out;
}

std::vector<ModuleTrace> run_robot(const RobotConfig& config, const Timeline& plan, Millis horizon) {
  Robot robot(config);
  auto next = plan.events.begin();
  while (robot.now() < horizon) {
    while (next != plan.events.end() && next->arrival_time <= robot.now()) {
      robot.deliver(*next);
      ++next;
    }
    robot.tick();
  }
  return robot.traces();
}

}  // namespace pinsurf

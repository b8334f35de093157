#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pinsurf/approx.hpp"
#include "pinsurf/error.hpp"

namespace pinsurf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Fit {
  // Residual energy left after subtracting the fitted atom; lower is better.
  double residual_energy = std::numeric_limits<double>::infinity();
  double amplitude = 0.0;
  double phase = 0.0;
};

struct Params {
  double scale = 1.0;
  double position = 0.0;
  double frequency = 0.0;
};

double wrap(double v, double period) {
  double r = std::fmod(v, period);
  if (r < 0.0) r += period;
  return r >= period ? 0.0 : r;
}

// Least-squares fit of the residual onto span{g cos(wx), g sin(wx)}. The best
// phase and amplitude for fixed (s, p, k) follow in closed form; this is the
// same as maximising |<r, atom>| / ||atom|| over the phase. The remaining
// energy is summed explicitly: the normal-equation estimate loses precision
// exactly where matches are near perfect.
Fit fit_pair(std::span<const double> residual, std::span<const double> envelope, double frequency,
             double amplitude_limit) {
  const std::size_t n = residual.size();
  const double omega = kTwoPi * frequency / static_cast<double>(n);
  double g11 = 0.0, g22 = 0.0, g12 = 0.0, r1 = 0.0, r2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double arg = omega * static_cast<double>(i);
    const double u = envelope[i] * std::cos(arg);
    const double v = envelope[i] * std::sin(arg);
    g11 += u * u;
    g22 += v * v;
    g12 += u * v;
    r1 += residual[i] * u;
    r2 += residual[i] * v;
  }
  Fit fit;
  if (g11 <= 0.0 && g22 <= 0.0) return fit;
  double c1 = 0.0, c2 = 0.0;
  const double det = g11 * g22 - g12 * g12;
  if (g22 <= 1e-12 * g11 || g11 <= 1e-12 * g22 || det <= 1e-10 * g11 * g22) {
    // Even and odd parts are (numerically) collinear: a one-dimensional fit.
    if (g11 >= g22) {
      c1 = r1 / g11;
    } else {
      c2 = r2 / g22;
    }
  } else {
    c1 = (g22 * r1 - g12 * r2) / det;
    c2 = (g11 * r2 - g12 * r1) / det;
  }
  // a g cos(wx + phi) = (a cos phi) u - (a sin phi) v
  fit.amplitude = std::hypot(c1, c2);
  fit.phase = wrap(std::atan2(-c2, c1), kTwoPi);
  if (!(fit.amplitude <= amplitude_limit)) return fit;
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double arg = omega * static_cast<double>(i);
    const double d = residual[i] - envelope[i] * (c1 * std::cos(arg) + c2 * std::sin(arg));
    energy += d * d;
  }
  fit.residual_energy = energy;
  return fit;
}

class Pursuit {
 public:
  Pursuit(std::size_t n, const MpOptions& options, double amplitude_limit)
      : n_(n), options_(options), amplitude_limit_(amplitude_limit), envelope_(n) {}

  Fit evaluate(std::span<const double> residual, const Params& p) {
    const double nn = static_cast<double>(n_);
    if (p.scale < options_.min_scale || p.scale > 2.0 * nn || p.frequency < 0.0 ||
        p.frequency > nn / 2.0) {
      return {};
    }
    for (std::size_t i = 0; i < n_; ++i) {
      envelope_[i] = gaussian_periodized(p.scale, static_cast<double>(i) - p.position, n_);
    }
    return fit_pair(residual, envelope_, p.frequency, amplitude_limit_);
  }

  // Derivative-free coordinate search with shrinking steps. Only strict
  // improvements are accepted, so the fit never gets worse than the start.
  std::pair<Params, Fit> refine(std::span<const double> residual, Params start) {
    Params cur = start;
    Fit best = evaluate(residual, cur);
    double log_step = 0.5;  // on log2(scale)
    double pos_step = 0.5;
    double freq_step = 0.25;
    constexpr int kMaxEvaluations = 4000;
    int evaluations = 0;
    while (std::max({log_step, pos_step, freq_step}) > 1e-9 && evaluations < kMaxEvaluations) {
      bool improved = false;
      for (int coord = 0; coord < 3; ++coord) {
        for (double dir : {1.0, -1.0}) {
          Params trial = cur;
          switch (coord) {
            case 0: trial.scale = cur.scale * std::exp2(dir * log_step); break;
            case 1: trial.position = wrap(cur.position + dir * pos_step, static_cast<double>(n_)); break;
            case 2: trial.frequency = cur.frequency + dir * freq_step; break;
          }
          // Keep moving in a direction while it pays off.
          while (evaluations < kMaxEvaluations) {
            const Fit f = evaluate(residual, trial);
            ++evaluations;
            if (!(f.residual_energy < best.residual_energy)) break;
            best = f;
            cur = trial;
            improved = true;
            switch (coord) {
              case 0: trial.scale = cur.scale * std::exp2(dir * log_step); break;
              case 1: trial.position = wrap(cur.position + dir * pos_step, static_cast<double>(n_)); break;
              case 2: trial.frequency = cur.frequency + dir * freq_step; break;
            }
          }
        }
      }
      if (!improved) {
        log_step *= 0.5;
        pos_step *= 0.5;
        freq_step *= 0.5;
      }
    }
    return {cur, best};
  }

 private:
  std::size_t n_;
  MpOptions options_;
  double amplitude_limit_;
  std::vector<double> envelope_;
};

struct Candidate {
  double residual_energy;
  Params params;
};

double energy(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

void subtract_atom(std::vector<double>& residual, const MpAtom& atom) {
  const std::size_t n = residual.size();
  for (std::size_t i = 0; i < n; ++i) residual[i] -= atom_eval(atom, static_cast<double>(i), n);
}

}  // namespace

MpDecomposition mp_decompose(std::span<const double> shape, const MpOptions& options) {
  if (shape.empty()) fail(ErrorCode::InvalidInput, "mp_decompose: empty shape");
  if (options.max_terms == 0) fail(ErrorCode::InvalidInput, "mp_decompose: max_terms must be >= 1");
  if (!(options.tolerance >= 0.0)) fail(ErrorCode::InvalidInput, "mp_decompose: negative tolerance");
  for (double v : shape) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidInput, "mp_decompose: non-finite value");
  }

  const std::size_t n = shape.size();
  const double nn = static_cast<double>(n);
  std::vector<double> residual(shape.begin(), shape.end());

  MpDecomposition out;
  const double initial = std::sqrt(energy(residual));
  out.residual_norms.push_back(initial);
  if (initial == 0.0) return out;

  double peak = 0.0;
  for (double v : shape) peak = std::max(peak, std::abs(v));
  const double amplitude_limit = options.amplitude_factor * peak;
  Pursuit pursuit(n, options, amplitude_limit);

  // Dyadic scales up to N, integer positions, integer frequencies to Nyquist.
  std::vector<double> scales;
  for (double s = 1.0; s < nn; s *= 2.0) scales.push_back(s);
  scales.push_back(nn);
  std::vector<std::vector<double>> envelopes;  // [scale * n + position] -> samples
  for (double s : scales) {
    for (std::size_t p = 0; p < n; ++p) {
      std::vector<double> env(n);
      for (std::size_t i = 0; i < n; ++i) {
        env[i] = gaussian_periodized(s, static_cast<double>(i) - static_cast<double>(p), n);
      }
      envelopes.push_back(std::move(env));
    }
  }
  const std::size_t max_freq = n / 2;

  double current = energy(residual);
  while (out.atoms.size() < options.max_terms) {
    const double norm = std::sqrt(current);
    if (norm <= options.tolerance * initial || norm <= 1e-15 * initial) break;

    // Matching: rank every dictionary atom by the energy it leaves behind.
    std::vector<Candidate> ranked;
    ranked.reserve(envelopes.size() * (max_freq + 1));
    for (std::size_t si = 0; si < scales.size(); ++si) {
      for (std::size_t p = 0; p < n; ++p) {
        const auto& env = envelopes[si * n + p];
        for (std::size_t k = 0; k <= max_freq; ++k) {
          const Fit f = fit_pair(residual, env, static_cast<double>(k), amplitude_limit);
          if (f.residual_energy < current) {
            ranked.push_back({f.residual_energy, {scales[si], static_cast<double>(p), static_cast<double>(k)}});
          }
        }
      }
    }
    if (ranked.empty()) break;
    const std::size_t keep = std::min(ranked.size(), std::max<std::size_t>(1, options.refine_candidates));
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                      [](const Candidate& a, const Candidate& b) { return a.residual_energy < b.residual_energy; });

    // Pursuit: refine the leading candidates and keep the best outcome.
    Params best_params;
    Fit best_fit;
    for (std::size_t c = 0; c < keep; ++c) {
      auto [params, fit] = pursuit.refine(residual, ranked[c].params);
      if (fit.residual_energy < best_fit.residual_energy) {
        best_fit = fit;
        best_params = params;
      }
    }

    const MpAtom atom{best_fit.amplitude, best_params.scale, wrap(best_params.position, nn),
                      best_params.frequency, best_fit.phase};
    std::vector<double> next(residual);
    subtract_atom(next, atom);
    const double next_energy = energy(next);
    if (!(next_energy < current)) break;
    residual = std::move(next);
    current = next_energy;
    out.atoms.push_back(atom);

    // Cyclic pursuit: re-fit each earlier atom against the residual it
    // leaves behind. The previous atom stays feasible, so the residual norm
    // cannot grow.
    for (int pass = 0; pass < options.refit_passes; ++pass) {
      for (std::size_t j = 0; j + 1 < out.atoms.size(); ++j) {
        MpAtom& old = out.atoms[j];
        std::vector<double> without(residual);
        subtract_atom(without, MpAtom{-old.amplitude, old.scale, old.position, old.frequency, old.phase});
        auto [params, fit] = pursuit.refine(without, {old.scale, old.position, old.frequency});
        const MpAtom candidate{fit.amplitude, params.scale, wrap(params.position, nn), params.frequency,
                               fit.phase};
        std::vector<double> trial(std::move(without));
        subtract_atom(trial, candidate);
        const double trial_energy = energy(trial);
        if (trial_energy < current) {
          old = candidate;
          residual = std::move(trial);
          current = trial_energy;
        }
      }
    }
    out.residual_norms.push_back(std::sqrt(current));
    out.history.push_back(out.atoms);
  }
  return out;
}

std::vector<MpAtom> mp_decompose(std::span<const double> shape, std::size_t max_terms, double tolerance) {
  MpOptions options;
  options.max_terms = max_terms;
  options.tolerance = tolerance;
  return mp_decompose(shape, options).atoms;
}

}  // namespace pinsurf

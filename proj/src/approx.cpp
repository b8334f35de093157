#include "pinsurf/approx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "pinsurf/error.hpp"

namespace pinsurf {

namespace {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

ShapeGrid::ShapeGrid(std::size_t rows, std::size_t cols, std::vector<double> heights)
    : rows_(rows), cols_(cols), heights_(std::move(heights)) {
  if (rows == 0 || cols == 0) fail(ErrorCode::InvalidInput, "shape grid needs at least one row and column");
  if (heights_.size() != rows * cols) {
    std::ostringstream os;
    os << "shape grid " << rows << "x" << cols << " given " << heights_.size() << " heights";
    fail(ErrorCode::InvalidInput, os.str());
  }
  if (!all_finite(heights_)) fail(ErrorCode::InvalidInput, "shape grid heights must be finite");
}

std::string_view form_name(Form form) {
  switch (form) {
    case Form::Dct: return "dct";
    case Form::Mp: return "mp";
    case Form::Rbf: return "rbf";
    case Form::Wave: return "wave";
    case Form::Seq: return "seq";
  }
  return "?";
}

Form form_of(const Term& term) {
  return std::visit(Overloaded{
                        [](const DctTerm&) { return Form::Dct; },
                        [](const MpAtom&) { return Form::Mp; },
                        [](const RbfTerm&) { return Form::Rbf; },
                        [](const WavePair&) { return Form::Wave; },
                        [](const SeqRef&) { return Form::Seq; },
                    },
                    term);
}

// ---------------------------------------------------------------------------

namespace {

double dct_basis(int t, double x, std::size_t n_total) {
  const double k = std::numbers::pi * t / (2.0 * static_cast<double>(n_total));
  return std::cos(k * (2.0 * x + 1.0));
}

}  // namespace

std::vector<DctTerm> dct_forward(std::span<const double> shape) {
  if (shape.empty()) fail(ErrorCode::InvalidInput, "dct_forward: empty shape");
  if (!all_finite(shape)) fail(ErrorCode::InvalidInput, "dct_forward: non-finite value");
  const std::size_t n = shape.size();
  std::vector<DctTerm> terms(n);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += shape[i] * (t == 0 ? 1.0 : dct_basis(static_cast<int>(t), static_cast<double>(i), n));
    }
    terms[t] = {static_cast<int>(t), acc / static_cast<double>(n)};
  }
  return terms;
}

double dct_eval(std::span<const DctTerm> terms, int x, std::size_t n_total) {
  if (n_total == 0 || x < 0 || static_cast<std::size_t>(x) >= n_total) {
    fail(ErrorCode::InvalidInput, "dct_eval: module index outside [0, N)");
  }
  double f = 0.0;
  for (const auto& term : terms) {
    if (term.index < 0 || static_cast<std::size_t>(term.index) >= n_total) {
      fail(ErrorCode::InvalidInput, "dct_eval: term index outside [0, N)");
    }
    f += term.index == 0 ? term.amplitude
                         : 2.0 * term.amplitude * dct_basis(term.index, x, n_total);
  }
  return f;
}

// ---------------------------------------------------------------------------

double gaussian_periodized(double scale, double x, std::size_t n_total) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    fail(ErrorCode::InvalidInput, "gaussian_periodized: scale must be positive");
  }
  if (n_total == 0) fail(ErrorCode::InvalidInput, "gaussian_periodized: N must be >= 1");
  const double n = static_cast<double>(n_total);
  // Reduce into [0, N) so that the window of images is centred identically
  // for x and x + N.
  const double xr = x - n * std::floor(x / n);
  static const double kReach = std::sqrt(std::log(1e12) / std::numbers::pi);
  const int images = static_cast<int>(std::ceil(scale * kReach / n)) + 1;
  double sum = 0.0;
  for (int j = -images; j <= images + 1; ++j) {
    const double u = (xr - j * n) / scale;
    sum += std::exp(-std::numbers::pi * u * u);
  }
  return sum;
}

double atom_eval(const MpAtom& atom, double x, std::size_t n_total) {
  const double n = static_cast<double>(n_total);
  return atom.amplitude * gaussian_periodized(atom.scale, x - atom.position, n_total) *
         std::cos(2.0 * std::numbers::pi * atom.frequency * x / n + atom.phase);
}

double mp_eval(std::span<const MpAtom> atoms, double x, std::size_t n_total) {
  double f = 0.0;
  for (const auto& atom : atoms) f += atom_eval(atom, x, n_total);
  return f;
}

double rbf_eval(std::span<const RbfTerm> terms, double x, double y) {
  double f = 0.0;
  for (const auto& t : terms) {
    const double dx = x - t.center_x;
    const double dy = y - t.center_y;
    f += t.amplitude * std::exp(-(dx * dx + dy * dy) / (t.width * t.width));
  }
  return f;
}

double wave_eval(const WavePair& wave, double x) {
  const double kx = wave.wavevector * x;
  return wave.cos_amp * std::cos(kx - std::numbers::pi / 2.0) + wave.sin_amp * std::cos(kx);
}

double term_eval(const Term& term, int n, double x, double y, std::size_t n_total) {
  return std::visit(
      Overloaded{
          [&](const DctTerm& t) {
            const DctTerm one[] = {t};
            return dct_eval(one, static_cast<int>(std::lround(x)), n_total);
          },
          [&](const MpAtom& a) { return atom_eval(a, x, n_total); },
          [&](const RbfTerm& r) {
            const RbfTerm one[] = {r};
            return rbf_eval(one, x, y);
          },
          [&](const WavePair& w) { return wave_eval(w, x); },
          [&](const SeqRef& s) { return s.module == n ? s.height : 0.0; },
      },
      term);
}

// ---------------------------------------------------------------------------

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

BuiltinShape parse_builtin_shape(std::string_view name) {
  for (auto shape : all_builtin_shapes()) {
    if (builtin_shape_name(shape) == name) return shape;
  }
  fail(ErrorCode::InvalidInput, "unknown shape '" + std::string(name) + "'");
}

std::string_view builtin_shape_name(BuiltinShape shape) {
  switch (shape) {
    case BuiltinShape::Identity: return "identity";
    case BuiltinShape::Plane: return "plane";
    case BuiltinShape::Parabola: return "parabola";
    case BuiltinShape::Checkers: return "checkers";
    case BuiltinShape::Peak: return "peak";
    case BuiltinShape::Random: return "random";
  }
  return "?";
}

const std::vector<BuiltinShape>& all_builtin_shapes() {
  static const std::vector<BuiltinShape> shapes = {
      BuiltinShape::Identity, BuiltinShape::Plane, BuiltinShape::Parabola,
      BuiltinShape::Checkers, BuiltinShape::Peak,  BuiltinShape::Random,
  };
  return shapes;
}

ShapeGrid builtin_shape(BuiltinShape shape, std::uint64_t seed) {
  constexpr std::size_t kSide = 4;
  std::vector<double> h(kSide * kSide, 0.0);
  SplitMix64 rng(seed);
  for (std::size_t y = 0; y < kSide; ++y) {
    for (std::size_t x = 0; x < kSide; ++x) {
      const double fx = static_cast<double>(x);
      const double fy = static_cast<double>(y);
      double z = 0.0;
      switch (shape) {
        case BuiltinShape::Identity: z = x == y ? 1.0 : 0.0; break;
        case BuiltinShape::Plane: z = fx + 2.0 * fy; break;
        case BuiltinShape::Parabola: z = 2.0 * fx * fx + 3.0 * fy * fy - 3.0 * fx * fy; break;
        case BuiltinShape::Checkers: z = static_cast<double>((x + y) % 2); break;
        case BuiltinShape::Peak: z = (x == 1 && y == 2) ? 1.0 : 0.0; break;
        case BuiltinShape::Random: z = rng.uniform(); break;
      }
      h[y * kSide + x] = z;
    }
  }
  return ShapeGrid(kSide, kSide, std::move(h));
}

ShapeGrid scale_to_stroke(const ShapeGrid& grid, double stroke_mm) {
  if (!(stroke_mm > 0.0)) fail(ErrorCode::InvalidInput, "scale_to_stroke: stroke must be positive");
  const auto& h = grid.heights();
  const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
  std::vector<double> out(h.size(), stroke_mm / 2.0);
  if (*hi > *lo) {
    const double span = *hi - *lo;
    const double low = *lo;
    std::transform(h.begin(), h.end(), out.begin(),
                   [&](double v) { return (v - low) / span * stroke_mm; });
  }
  return ShapeGrid(grid.rows(), grid.cols(), std::move(out));
}

ShapeVector flatten(const ShapeGrid& grid) { return grid.heights(); }

ShapeGrid unflatten(std::span<const double> values, std::size_t rows, std::size_t cols) {
  return ShapeGrid(rows, cols, std::vector<double>(values.begin(), values.end()));
}

double relative_error(std::span<const double> current, std::span<const double> target,
                      std::span<const double> initial) {
  if (current.size() != target.size() || initial.size() != target.size()) {
    fail(ErrorCode::InvalidInput, "relative_error: length mismatch");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    num += (current[i] - target[i]) * (current[i] - target[i]);
    den += (initial[i] - target[i]) * (initial[i] - target[i]);
  }
  if (den == 0.0) {
    if (num == 0.0) return 0.0;
    fail(ErrorCode::DegenerateReference, "relative_error: initial shape equals target");
  }
  return std::sqrt(num / den);
}

ApproxPlan order_terms(ApproxPlan plan, double seq_reference) {
  for (const auto& term : plan.terms) {
    if (form_of(term) != plan.form) fail(ErrorCode::InvalidInput, "order_terms: mixed term forms");
  }
  auto key = [&](const Term& term) {
    return std::visit(Overloaded{
                          [](const DctTerm& t) { return std::abs(t.amplitude); },
                          [](const MpAtom& a) { return std::abs(a.amplitude); },
                          [](const RbfTerm& r) { return std::abs(r.amplitude); },
                          [](const WavePair& w) { return std::hypot(w.cos_amp, w.sin_amp); },
                          [&](const SeqRef& s) { return std::abs(s.height - seq_reference); },
                      },
                      term);
  };
  if (plan.form == Form::Mp) return plan;
  std::stable_sort(plan.terms.begin(), plan.terms.end(),
                   [&](const Term& a, const Term& b) { return key(a) > key(b); });
  return plan;
}

ApproxPlan make_dct_plan(std::span<const double> shape) {
  ApproxPlan plan{Form::Dct, {}};
  for (const auto& t : dct_forward(shape)) plan.terms.emplace_back(t);
  return order_terms(std::move(plan));
}

ApproxPlan make_mp_plan(std::span<const double> shape, const MpOptions& options) {
  ApproxPlan plan{Form::Mp, {}};
  for (const auto& a : mp_decompose(shape, options).atoms) plan.terms.emplace_back(a);
  return plan;
}

ApproxPlan make_seq_plan(std::span<const double> heights_mm, double reference_mm) {
  ApproxPlan plan{Form::Seq, {}};
  for (std::size_t n = 0; n < heights_mm.size(); ++n) {
    plan.terms.emplace_back(SeqRef{static_cast<int>(n), heights_mm[n]});
  }
  return order_terms(std::move(plan), reference_mm);
}

}  // namespace pinsurf

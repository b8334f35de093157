#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pinsurf {

// Flattened per-module values (inputs f_n or heights h_n), indexed by the
// module identifier n.
using ShapeVector = std::vector<double>;

// Target surface as an R x C matrix. Storage is row-major: module n sits at
// column x = n % cols, row y = n / cols.
class ShapeGrid {
 public:
  ShapeGrid() = default;
  ShapeGrid(std::size_t rows, std::size_t cols, std::vector<double> heights);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return heights_.size(); }
  const std::vector<double>& heights() const noexcept { return heights_; }

  double at(std::size_t x, std::size_t y) const { return heights_.at(y * cols_ + x); }

  bool operator==(const ShapeGrid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> heights_;
};

enum class Form : std::uint8_t { Dct, Mp, Rbf, Wave, Seq };

std::string_view form_name(Form form);

// One cosine mode; the wave vector k_t = pi t / (2N) is implied by the index.
struct DctTerm {
  int index = 0;
  double amplitude = 0.0;

  bool operator==(const DctTerm&) const = default;
};

// Gaussian-windowed sinusoid on a periodic domain [0, N).
struct MpAtom {
  double amplitude = 0.0;
  double scale = 1.0;
  double position = 0.0;
  double frequency = 0.0;
  double phase = 0.0;

  bool operator==(const MpAtom&) const = default;
};

struct RbfTerm {
  double amplitude = 0.0;
  double width = 1.0;
  double center_x = 0.0;
  double center_y = 0.0;

  bool operator==(const RbfTerm&) const = default;
};

// f = a cos(k x - pi/2) + b cos(k x). With a = cos(vt), b = -sin(vt) this is
// the travelling wave sin(k x - v t).
struct WavePair {
  double wavevector = 0.0;
  double cos_amp = 0.0;
  double sin_amp = 0.0;

  bool operator==(const WavePair&) const = default;
};

// Sequential control: the reference height (mm) of one addressed module.
struct SeqRef {
  int module = 0;
  double height = 0.0;

  bool operator==(const SeqRef&) const = default;
};

using Term = std::variant<DctTerm, MpAtom, RbfTerm, WavePair, SeqRef>;

Form form_of(const Term& term);

struct ApproxPlan {
  Form form = Form::Dct;
  std::vector<Term> terms;
};

// ---------------------------------------------------------------------------
// Cosine expansion f_n = a_0 + 2 sum_{t>=1} a_t cos(k_t (2 x_n + 1)).

std::vector<DctTerm> dct_forward(std::span<const double> shape);

// Partial sums are allowed: only the supplied terms contribute.
double dct_eval(std::span<const DctTerm> terms, int x, std::size_t n_total);

// ---------------------------------------------------------------------------
// Time-frequency atoms.

// sum_j exp(-pi ((x - jN)/s)^2), truncated where the dropped tail is < 1e-12.
double gaussian_periodized(double scale, double x, std::size_t n_total);

double atom_eval(const MpAtom& atom, double x, std::size_t n_total);
double mp_eval(std::span<const MpAtom> atoms, double x, std::size_t n_total);

struct MpOptions {
  std::size_t max_terms = 16;
  // Stop once the residual norm drops to tolerance * initial norm.
  double tolerance = 1e-6;
  // Best dictionary candidates handed to the local refinement per iteration.
  std::size_t refine_candidates = 6;
  // Lower bound on the refined scale; at 0.25 neighbouring samples see
  // exp(-16 pi) of an atom centred on a module.
  double min_scale = 0.25;
  // Atom amplitudes are capped at this multiple of the shape's peak
  // magnitude, which rejects ill-conditioned near-cancelling atoms.
  double amplitude_factor = 2.0;
  // Passes re-fitting earlier atoms after each new selection.
  int refit_passes = 1;
};

struct MpDecomposition {
  std::vector<MpAtom> atoms;
  // residual_norms[i] is the residual l2 norm after i atoms (index 0 is the
  // input norm).
  std::vector<double> residual_norms;
  // history[i] is the refitted atom set after i + 1 iterations.
  std::vector<std::vector<MpAtom>> history;
};

MpDecomposition mp_decompose(std::span<const double> shape, const MpOptions& options);
std::vector<MpAtom> mp_decompose(std::span<const double> shape, std::size_t max_terms,
                                 double tolerance);

// ---------------------------------------------------------------------------
// Gaussian radial basis functions and the travelling-wave pair.

double rbf_eval(std::span<const RbfTerm> terms, double x, double y);
double wave_eval(const WavePair& wave, double x);

// ---------------------------------------------------------------------------
// Test shapes and metrics.

enum class BuiltinShape { Identity, Plane, Parabola, Checkers, Peak, Random };

BuiltinShape parse_builtin_shape(std::string_view name);
std::string_view builtin_shape_name(BuiltinShape shape);
const std::vector<BuiltinShape>& all_builtin_shapes();

// 4x4 grids with module coordinates x, y in {0, 1, 2, 3}. The seed is only
// read by Random.
ShapeGrid builtin_shape(BuiltinShape shape, std::uint64_t seed = 0);

// Affine map of [min, max] onto [0, stroke_mm]; flat grids sit at mid-stroke.
ShapeGrid scale_to_stroke(const ShapeGrid& grid, double stroke_mm);

ShapeVector flatten(const ShapeGrid& grid);
ShapeGrid unflatten(std::span<const double> values, std::size_t rows, std::size_t cols);

// ||current - target|| / ||initial - target||.
double relative_error(std::span<const double> current, std::span<const double> target,
                      std::span<const double> initial);

// Stable sort by descending |amplitude|. SEQ plans sort by descending
// |h_n - seq_reference|. MP plans keep their greedy selection order.
ApproxPlan order_terms(ApproxPlan plan, double seq_reference = 0.0);

// Plan builders used by the harness; `shape` is in stroke-normalised units
// except for SEQ, which takes heights in mm.
ApproxPlan make_dct_plan(std::span<const double> shape);
ApproxPlan make_mp_plan(std::span<const double> shape, const MpOptions& options = {});
ApproxPlan make_seq_plan(std::span<const double> heights_mm, double reference_mm);

// Evaluate one term at module (x, y) of an N-module robot; SEQ terms return
// their height when addressed to module `n`, else 0.
double term_eval(const Term& term, int n, double x, double y, std::size_t n_total);

// splitmix64; the Random shape draws (state >> 11) * 2^-53 per module in
// row-major order.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();

 private:
  std::uint64_t state_;
};

}  // namespace pinsurf

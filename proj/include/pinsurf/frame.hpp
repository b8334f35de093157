#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "pinsurf/approx.hpp"

namespace pinsurf {

inline constexpr std::size_t kPayloadBytes = 8;

// Header byte: low 7 bits select the function form, the top bit asks the
// receiver to clear its accumulated input before applying the term.
inline constexpr std::uint8_t kHeaderDct = 0x01;
inline constexpr std::uint8_t kHeaderMp = 0x02;
inline constexpr std::uint8_t kHeaderRbf = 0x03;
inline constexpr std::uint8_t kHeaderWave = 0x04;
inline constexpr std::uint8_t kHeaderSeq = 0x05;
inline constexpr std::uint8_t kHeaderRestart = 0x80;

struct Frame {
  std::uint8_t header = 0;
  std::array<std::uint8_t, kPayloadBytes> payload{};
  // Module identifier for SEQ frames; travels as the message ID.
  std::optional<int> seq_id;

  bool operator==(const Frame&) const = default;
};

// Decodes the form selector; throws Protocol on unknown codes.
Form frame_form(const Frame& frame);
bool frame_restart(const Frame& frame);

// One quantised field: codes 0 .. 2^bits - 1 map linearly onto [min, max].
// Periodic fields (positions, phases) wrap instead of clamping and cover
// [min, min + period) with period = (max - min) + step.
struct QuantField {
  int bits = 16;
  double min = 0.0;
  double max = 1.0;
  bool periodic = false;

  std::uint32_t max_code() const { return (std::uint32_t{1} << bits) - 1; }
  double step() const { return (max - min) / static_cast<double>(max_code()); }
  double period() const { return max - min + step(); }
};

// Throws InvalidInput for non-finite values. Out-of-range values clamp
// (periodic fields wrap).
std::uint32_t quantize(double value, const QuantField& field);
double dequantize(std::uint32_t code, const QuantField& field);

// Field ranges depend on the robot size N and the actuator stroke.
struct CodecConfig {
  std::size_t n_total = 16;
  double stroke_mm = 70.0;
};

struct QuantTable {
  QuantField dct_amplitude;
  QuantField mp_amplitude, mp_scale, mp_position, mp_frequency, mp_phase;
  QuantField rbf_amplitude, rbf_width, rbf_center;
  QuantField wave_wavevector, wave_amplitude;
  QuantField seq_height;
};

QuantTable quant_table(const CodecConfig& config);

// SEQ terms are rejected here; use encode_seq_ref.
Frame encode_term(const Term& term, const CodecConfig& config = {}, bool restart = false);
Frame encode_seq_ref(int module_index, double height_mm, const CodecConfig& config = {});
Term decode_frame(const Frame& frame, const CodecConfig& config = {});

// Round trip through the wire format.
Term quantize_term(const Term& term, const CodecConfig& config = {});

// "hh|pp pp pp pp pp pp pp pp" with "#id" appended for SEQ frames.
std::string frame_to_hex(const Frame& frame);
// Inverse of frame_to_hex; whitespace and '|' separators are optional.
Frame frame_from_hex(const std::string& text);

}  // namespace pinsurf

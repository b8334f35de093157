#include "pinsurf/frame.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "pinsurf/error.hpp"

namespace pinsurf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Little-endian field writer/reader over the 8-byte payload.
class PayloadWriter {
 public:
  explicit PayloadWriter(std::array<std::uint8_t, kPayloadBytes>& bytes) : bytes_(bytes) {}

  void put(std::uint32_t code, int bits) {
    for (int b = 0; b < bits / 8; ++b) bytes_.at(pos_++) = static_cast<std::uint8_t>(code >> (8 * b));
  }

 private:
  std::array<std::uint8_t, kPayloadBytes>& bytes_;
  std::size_t pos_ = 0;
};

class PayloadReader {
 public:
  explicit PayloadReader(const std::array<std::uint8_t, kPayloadBytes>& bytes) : bytes_(bytes) {}

  std::uint32_t get(int bits) {
    std::uint32_t code = 0;
    for (int b = 0; b < bits / 8; ++b) code |= std::uint32_t{bytes_.at(pos_++)} << (8 * b);
    return code;
  }

  // Remaining bytes are reserved and must be zero.
  void expect_reserved() const {
    for (std::size_t i = pos_; i < kPayloadBytes; ++i) {
      if (bytes_[i] != 0) fail(ErrorCode::Protocol, "frame: reserved payload byte is not zero");
    }
  }

 private:
  const std::array<std::uint8_t, kPayloadBytes>& bytes_;
  std::size_t pos_ = 0;
};

QuantField field(int bits, double min, double max, bool periodic = false) {
  return QuantField{bits, min, max, periodic};
}

// Range [min, min + span) split into 2^bits bins, for wrapped quantities.
QuantField periodic_field(int bits, double min, double span) {
  const double step = span / static_cast<double>(std::uint32_t{1} << bits);
  return field(bits, min, min + span - step, true);
}

// (0, top]: code c maps to top * (c + 1) / 2^bits, never to zero.
QuantField positive_field(int bits, double top) {
  const double step = top / static_cast<double>(std::uint32_t{1} << bits);
  return field(bits, step, top);
}

}  // namespace

Form frame_form(const Frame& frame) {
  switch (frame.header & ~kHeaderRestart) {
    case kHeaderDct: return Form::Dct;
    case kHeaderMp: return Form::Mp;
    case kHeaderRbf: return Form::Rbf;
    case kHeaderWave: return Form::Wave;
    case kHeaderSeq: return Form::Seq;
    default: break;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "frame: unknown header 0x%02X", frame.header);
  fail(ErrorCode::Protocol, buf);
}

bool frame_restart(const Frame& frame) { return (frame.header & kHeaderRestart) != 0; }

std::uint32_t quantize(double value, const QuantField& f) {
  if (!std::isfinite(value)) fail(ErrorCode::InvalidInput, "quantize: non-finite value");
  const double step = f.step();
  if (f.periodic) {
    const double period = f.period();
    double offset = std::fmod(value - f.min, period);
    if (offset < 0.0) offset += period;
    const auto bins = static_cast<std::uint64_t>(f.max_code()) + 1;
    return static_cast<std::uint32_t>(static_cast<std::uint64_t>(std::llround(offset / step)) % bins);
  }
  const double clamped = std::clamp(value, f.min, f.max);
  const double code = std::round((clamped - f.min) / step);
  return static_cast<std::uint32_t>(std::clamp(code, 0.0, static_cast<double>(f.max_code())));
}

double dequantize(std::uint32_t code, const QuantField& f) {
  return f.min + static_cast<double>(code & f.max_code()) * f.step();
}

QuantTable quant_table(const CodecConfig& config) {
  if (config.n_total == 0) fail(ErrorCode::InvalidInput, "codec: N must be >= 1");
  if (!(config.stroke_mm > 0.0)) fail(ErrorCode::InvalidInput, "codec: stroke must be positive");
  const double n = static_cast<double>(config.n_total);
  QuantTable t;
  t.dct_amplitude = field(16, -2.0, 2.0);
  t.mp_amplitude = field(16, -2.0, 2.0);
  t.mp_scale = positive_field(16, 2.0 * n);
  t.mp_position = periodic_field(8, 0.0, n);
  t.mp_frequency = field(8, 0.0, n / 2.0);
  t.mp_phase = periodic_field(8, 0.0, kTwoPi);
  t.rbf_amplitude = field(16, 0.0, 2.0);
  t.rbf_width = positive_field(8, 2.0 * n);
  t.rbf_center = field(16, -n, 2.0 * n);
  t.wave_wavevector = field(16, 0.0, std::numbers::pi);
  t.wave_amplitude = field(16, -1.0, 1.0);
  t.seq_height = field(16, 0.0, config.stroke_mm);
  return t;
}

Frame encode_term(const Term& term, const CodecConfig& config, bool restart) {
  const QuantTable q = quant_table(config);
  Frame frame;
  PayloadWriter w(frame.payload);
  std::visit(Overloaded{
                 [&](const DctTerm& t) {
                   if (t.index < 0 || t.index > 255) fail(ErrorCode::InvalidInput, "encode: DCT index outside 8 bits");
                   frame.header = kHeaderDct;
                   w.put(quantize(t.amplitude, q.dct_amplitude), 16);
                   w.put(static_cast<std::uint32_t>(t.index), 8);
                 },
                 [&](const MpAtom& a) {
                   frame.header = kHeaderMp;
                   w.put(quantize(a.amplitude, q.mp_amplitude), 16);
                   w.put(quantize(a.scale, q.mp_scale), 16);
                   w.put(quantize(a.position, q.mp_position), 8);
                   w.put(quantize(a.frequency, q.mp_frequency), 8);
                   w.put(quantize(a.phase, q.mp_phase), 8);
                 },
                 [&](const RbfTerm& r) {
                   frame.header = kHeaderRbf;
                   w.put(quantize(r.amplitude, q.rbf_amplitude), 16);
                   w.put(quantize(r.width, q.rbf_width), 8);
                   w.put(quantize(r.center_x, q.rbf_center), 16);
                   w.put(quantize(r.center_y, q.rbf_center), 16);
                 },
                 [&](const WavePair& p) {
                   frame.header = kHeaderWave;
                   w.put(quantize(p.wavevector, q.wave_wavevector), 16);
                   w.put(quantize(p.cos_amp, q.wave_amplitude), 16);
                   w.put(quantize(p.sin_amp, q.wave_amplitude), 16);
                 },
                 [&](const SeqRef&) {
                   fail(ErrorCode::InvalidInput, "encode_term: SEQ terms use encode_seq_ref");
                 },
             },
             term);
  if (restart) frame.header |= kHeaderRestart;
  return frame;
}

Frame encode_seq_ref(int module_index, double height_mm, const CodecConfig& config) {
  if (module_index < 0 || static_cast<std::size_t>(module_index) >= config.n_total) {
    fail(ErrorCode::InvalidInput, "encode_seq_ref: module index outside [0, N)");
  }
  const QuantTable q = quant_table(config);
  Frame frame;
  frame.header = kHeaderSeq;
  frame.seq_id = module_index;
  PayloadWriter w(frame.payload);
  w.put(quantize(height_mm, q.seq_height), 16);
  return frame;
}

Term decode_frame(const Frame& frame, const CodecConfig& config) {
  const QuantTable q = quant_table(config);
  PayloadReader r(frame.payload);
  Term term;
  switch (frame_form(frame)) {
    case Form::Dct: {
      DctTerm t;
      t.amplitude = dequantize(r.get(16), q.dct_amplitude);
      t.index = static_cast<int>(r.get(8));
      if (static_cast<std::size_t>(t.index) >= config.n_total) {
        fail(ErrorCode::Protocol, "frame: DCT index outside [0, N)");
      }
      term = t;
      break;
    }
    case Form::Mp: {
      MpAtom a;
      a.amplitude = dequantize(r.get(16), q.mp_amplitude);
      a.scale = dequantize(r.get(16), q.mp_scale);
      a.position = dequantize(r.get(8), q.mp_position);
      a.frequency = dequantize(r.get(8), q.mp_frequency);
      a.phase = dequantize(r.get(8), q.mp_phase);
      term = a;
      break;
    }
    case Form::Rbf: {
      RbfTerm t;
      t.amplitude = dequantize(r.get(16), q.rbf_amplitude);
      t.width = dequantize(r.get(8), q.rbf_width);
      t.center_x = dequantize(r.get(16), q.rbf_center);
      t.center_y = dequantize(r.get(16), q.rbf_center);
      term = t;
      break;
    }
    case Form::Wave: {
      WavePair p;
      p.wavevector = dequantize(r.get(16), q.wave_wavevector);
      p.cos_amp = dequantize(r.get(16), q.wave_amplitude);
      p.sin_amp = dequantize(r.get(16), q.wave_amplitude);
      term = p;
      break;
    }
    case Form::Seq: {
      if (!frame.seq_id) fail(ErrorCode::Protocol, "frame: SEQ frame without message ID");
      term = SeqRef{*frame.seq_id, dequantize(r.get(16), q.seq_height)};
      break;
    }
  }
  r.expect_reserved();
  return term;
}

Term quantize_term(const Term& term, const CodecConfig& config) {
  if (const auto* s = std::get_if<SeqRef>(&term)) {
    return decode_frame(encode_seq_ref(s->module, s->height, config), config);
  }
  return decode_frame(encode_term(term, config), config);
}

std::string frame_to_hex(const Frame& frame) {
  char buf[8];
  std::string out;
  std::snprintf(buf, sizeof buf, "%02x|", frame.header);
  out += buf;
  for (std::size_t i = 0; i < kPayloadBytes; ++i) {
    std::snprintf(buf, sizeof buf, i + 1 < kPayloadBytes ? "%02x " : "%02x", frame.payload[i]);
    out += buf;
  }
  if (frame.seq_id) out += "#" + std::to_string(*frame.seq_id);
  return out;
}

Frame frame_from_hex(const std::string& text) {
  std::string hex;
  std::optional<int> id;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '#') {
      try {
        id = std::stoi(text.substr(i + 1));
      } catch (const std::exception&) {
        fail(ErrorCode::InvalidInput, "frame hex: bad message ID");
      }
      break;
    }
    if (std::isxdigit(static_cast<unsigned char>(c))) {
      hex += c;
    } else if (!std::isspace(static_cast<unsigned char>(c)) && c != '|' && c != ':') {
      fail(ErrorCode::InvalidInput, std::string("frame hex: unexpected character '") + c + "'");
    }
  }
  if (hex.size() != 2 * (kPayloadBytes + 1)) {
    fail(ErrorCode::InvalidInput, "frame hex: expected 9 bytes (header + 8 payload)");
  }
  Frame frame;
  auto byte_at = [&](std::size_t i) {
    return static_cast<std::uint8_t>(std::stoul(hex.substr(2 * i, 2), nullptr, 16));
  };
  frame.header = byte_at(0);
  for (std::size_t i = 0; i < kPayloadBytes; ++i) frame.payload[i] = byte_at(i + 1);
  frame.seq_id = id;
  return frame;
}

}  // namespace pinsurf

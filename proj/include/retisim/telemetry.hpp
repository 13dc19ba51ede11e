#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "retisim/waveform.hpp"

namespace retisim::telemetry {

constexpr double kDefaultBitrateKbps = 600.0;
constexpr std::uint8_t kSyncWord = 0xB8;
constexpr int kPreambleBits = 16;       // alternating, MSB-first 0xAAAA
constexpr std::size_t kMaxPayload = 32;
constexpr int kMinFrameBits = 48;       // preamble + sync + opcode + len + crc

struct BitStream {
    std::vector<std::uint8_t> bits; // 0/1
    double bitrate_kbps = kDefaultBitrateKbps;

    double bit_period_ns() const { return 1e6 / bitrate_kbps; }
};

// Half-bit line levels, two per encoded bit.
struct SymbolStream {
    std::vector<std::uint8_t> levels; // 0 = low, 1 = high
    double bitrate_kbps = kDefaultBitrateKbps;

    double half_period_ns() const { return 0.5e6 / bitrate_kbps; }
};

struct Frame {
    std::uint8_t opcode = 0;
    std::vector<std::uint8_t> payload;

    bool operator==(const Frame&) const = default;
};

// CRC-8, polynomial 0x07, init 0x00, MSB-first, no final xor.
std::uint8_t crc8(const std::uint8_t* data, std::size_t len);
std::uint8_t frame_crc(const Frame& f);

// preamble | sync | opcode | payload length | payload | crc(opcode+payload),
// each byte MSB-first.
BitStream frame_encode(const Frame& f);

enum class FrameError {
    None,
    BadPreamble,
    BadSync,
    LengthOverflow, // declared payload exceeds the maximum
    Truncated,      // declared payload runs past the end of the stream
    CrcMismatch,
};

struct FrameDecodeResult {
    std::optional<Frame> frame;
    FrameError error = FrameError::None;
    bool ok() const { return error == FrameError::None; }
};

FrameDecodeResult frame_decode(const BitStream& bits);
const char* frame_error_name(FrameError e);

// Rising mid-bit transition = 1 (802.3 polarity): 1 -> [low, high],
// 0 -> [high, low].
SymbolStream manchester_encode(const BitStream& bits);

struct ManchesterResult {
    std::vector<std::uint8_t> bits;
    std::vector<double> clock_edges_ns;   // recovered mid-bit instants
    std::vector<std::size_t> anomalies;   // bit positions with coding violations
    bool loss_of_signal = false;
    double recovered_bitrate_kbps = 0.0;  // from the mean mid-bit spacing
};

// Edge-based recovery from a sampled level waveform. Mid-bit transitions set
// the symbol clock; intervals near one bit period anchor the phase, and an
// alternating preamble therefore locks it within a few transitions. Tolerates
// a static frequency offset of +-20% and edge jitter up to ~10% of the bit
// period. The waveform must be sampled at >= 8x the bit rate.
ManchesterResult manchester_decode(const Waveform& levels, double expected_bitrate_kbps,
                                   double threshold = 0.5);

// Incremental form of the decoder for long streams.
class ManchesterDecoder {
  public:
    ManchesterDecoder(double expected_bitrate_kbps, double threshold = 0.5);

    void feed(const double* samples, std::size_t count, double dt_ns);
    void feed(const Waveform& w) { feed(w.samples.data(), w.samples.size(), w.dt_ns); }
    ManchesterResult finish();

  private:
    void push_transition(double t_ns, bool rising);
    void resolve_parity();
    void emit(double t_ns, bool rising, std::size_t halfpos);

    double half_period_ns_;
    double t_est_half_ns_;
    double threshold_;
    double t_ns_ = 0.0;
    bool have_level_ = false;
    bool level_ = false;
    double last_edge_ns_ = -1.0;
    std::size_t halfpos_ = 0;   // position of the last transition, in half bits
    bool parity_fixed_ = false;
    std::vector<std::pair<double, bool>> pending_; // edges buffered before parity lock
    ManchesterResult result_;
    std::size_t next_bit_index_ = 0;
};

struct AskParams {
    double p_high_mw = 28.0;
    double p_low_mw = 20.0;
    double edge_time_ns = 50.0;   // 10-90% optical transition
    double sample_period_ns = 10.0;
};

// Piecewise-exponential keying of the optical carrier between the two levels.
// A Manchester stream spends equal time at each level, so the mean optical
// power is (p_high + p_low) / 2.
Waveform ask_modulate(const SymbolStream& symbols, const AskParams& params);

// Frames located by their preamble + sync signature inside a decoded bit
// sequence (idle filler between frames is skipped over).
struct ScannedFrame {
    std::size_t start_bit = 0;
    std::size_t end_bit = 0; // one past the CRC
    FrameDecodeResult result;
};

std::vector<ScannedFrame> scan_frames(const std::vector<std::uint8_t>& bits);

struct BerResult {
    std::size_t errors = 0;
    std::size_t compared = 0;
    double ber = 0.0;
    std::ptrdiff_t offset = 0; // rx alignment relative to tx
};

// Hamming distance over the aligned overlap. Equal-length streams compare
// directly; otherwise the receive stream is located inside the transmit
// stream by exact match of its leading bits.
BerResult ber_measure(const BitStream& tx, const BitStream& rx);

// Hex text round trip for golden files: whitespace-tolerant, one nibble per
// hex digit, MSB-first, with an explicit bit count prefix ("nbits:").
std::string bits_to_hex(const BitStream& bits);
BitStream bits_from_hex(const std::string& text);

} // namespace retisim::telemetry

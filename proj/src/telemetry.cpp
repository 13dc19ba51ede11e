#include "retisim/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace retisim::telemetry {

std::uint8_t crc8(const std::uint8_t* data, std::size_t len) {
    std::uint8_t crc = 0x00;
    for (std::size_t i = 0; i < len; ++i) {
        crc ^= data[i];
        for (int b = 0; b < 8; ++b)
            crc = (crc & 0x80) ? static_cast<std::uint8_t>((crc << 1) ^ 0x07)
                               : static_cast<std::uint8_t>(crc << 1);
    }
    return crc;
}

std::uint8_t frame_crc(const Frame& f) {
    std::vector<std::uint8_t> buf;
    buf.reserve(1 + f.payload.size());
    buf.push_back(f.opcode);
    buf.insert(buf.end(), f.payload.begin(), f.payload.end());
    return crc8(buf.data(), buf.size());
}

namespace {

void push_byte(std::vector<std::uint8_t>& bits, std::uint8_t byte) {
    for (int b = 7; b >= 0; --b)
        bits.push_back((byte >> b) & 1u);
}

std::uint8_t read_byte(const std::vector<std::uint8_t>& bits, std::size_t at) {
    std::uint8_t v = 0;
    for (int b = 0; b < 8; ++b)
        v = static_cast<std::uint8_t>((v << 1) | (bits[at + static_cast<std::size_t>(b)] & 1u));
    return v;
}

} // namespace

BitStream frame_encode(const Frame& f) {
    if (f.payload.size() > kMaxPayload)
        throw ValidationError("frame payload exceeds 32 bytes");
    BitStream out;
    out.bits.reserve(static_cast<std::size_t>(kMinFrameBits) + 8 * f.payload.size());
    for (int i = 0; i < kPreambleBits; ++i)
        out.bits.push_back(i % 2 == 0 ? 1 : 0); // 0xAAAA
    push_byte(out.bits, kSyncWord);
    push_byte(out.bits, f.opcode);
    push_byte(out.bits, static_cast<std::uint8_t>(f.payload.size()));
    for (std::uint8_t byte : f.payload)
        push_byte(out.bits, byte);
    push_byte(out.bits, frame_crc(f));
    return out;
}

FrameDecodeResult frame_decode(const BitStream& stream) {
    FrameDecodeResult res;
    const auto& bits = stream.bits;
    if (bits.size() < static_cast<std::size_t>(kMinFrameBits)) {
        res.error = FrameError::Truncated;
        return res;
    }
    for (int i = 1; i < kPreambleBits; ++i) {
        if (bits[static_cast<std::size_t>(i)] == bits[static_cast<std::size_t>(i) - 1]) {
            res.error = FrameError::BadPreamble;
            return res;
        }
    }
    if (read_byte(bits, 16) != kSyncWord) {
        res.error = FrameError::BadSync;
        return res;
    }
    Frame f;
    f.opcode = read_byte(bits, 24);
    const std::size_t len = read_byte(bits, 32);
    if (len > kMaxPayload) {
        res.error = FrameError::LengthOverflow;
        return res;
    }
    if (bits.size() < 48 + 8 * len) {
        res.error = FrameError::Truncated;
        return res;
    }
    f.payload.resize(len);
    for (std::size_t i = 0; i < len; ++i)
        f.payload[i] = read_byte(bits, 40 + 8 * i);
    const std::uint8_t crc = read_byte(bits, 40 + 8 * len);
    if (crc != frame_crc(f)) {
        res.error = FrameError::CrcMismatch;
        return res;
    }
    res.frame = std::move(f);
    return res;
}

const char* frame_error_name(FrameError e) {
    switch (e) {
    case FrameError::None: return "none";
    case FrameError::BadPreamble: return "bad_preamble";
    case FrameError::BadSync: return "bad_sync";
    case FrameError::LengthOverflow: return "length_overflow";
    case FrameError::Truncated: return "truncated";
    case FrameError::CrcMismatch: return "crc_mismatch";
    }
    return "unknown";
}

SymbolStream manchester_encode(const BitStream& bits) {
    if (bits.bits.empty())
        throw ValidationError("cannot Manchester-encode an empty bitstream");
    SymbolStream out;
    out.bitrate_kbps = bits.bitrate_kbps;
    out.levels.reserve(2 * bits.bits.size());
    for (std::uint8_t bit : bits.bits) {
        // 1: low -> high mid-bit transition, 0: high -> low
        out.levels.push_back(bit ? 0 : 1);
        out.levels.push_back(bit ? 1 : 0);
    }
    return out;
}

ManchesterDecoder::ManchesterDecoder(double expected_bitrate_kbps, double threshold)
    : half_period_ns_(0.5e6 / expected_bitrate_kbps),
      t_est_half_ns_(0.5e6 / expected_bitrate_kbps), threshold_(threshold) {
    if (expected_bitrate_kbps <= 0.0)
        throw ValidationError("bitrate must be positive");
}

void ManchesterDecoder::feed(const double* samples, std::size_t count, double dt_ns) {
    if (dt_ns <= 0.0 || dt_ns > half_period_ns_ / 4.0) // >= 8 samples per bit
        throw ValidationError("Manchester decode needs >= 8 samples per bit period");
    for (std::size_t i = 0; i < count; ++i) {
        const bool level = samples[i] > threshold_;
        if (!have_level_) {
            have_level_ = true;
            level_ = level;
        } else if (level != level_) {
            // place the edge halfway between the two samples
            push_transition(t_ns_ - 0.5 * dt_ns, level);
            level_ = level;
        }
        t_ns_ += dt_ns;
    }
}

void ManchesterDecoder::push_transition(double t_ns, bool rising) {
    if (last_edge_ns_ < 0.0) {
        last_edge_ns_ = t_ns;
        pending_.emplace_back(t_ns, rising);
        return;
    }
    const double delta = t_ns - last_edge_ns_;
    last_edge_ns_ = t_ns;
    const double ratio = delta / t_est_half_ns_;
    std::size_t steps;
    if (ratio < 1.5) {
        steps = 1;
    } else if (ratio < 2.5) {
        steps = 2;
    } else {
        steps = static_cast<std::size_t>(std::lround(ratio));
        if (ratio > 5.0)
            result_.loss_of_signal = true;
    }
    if (steps <= 2) // track the symbol rate
        t_est_half_ns_ += 0.25 * (delta / static_cast<double>(steps) - t_est_half_ns_);

    if (!parity_fixed_) {
        pending_.emplace_back(t_ns, rising);
        // remember the step count in the position field of the previous
        // entry by accumulating later in resolve_parity; store via parallel
        // walk: we recompute intervals there from the timestamps using the
        // locked estimate, which is stable by then.
        if (steps == 2 || pending_.size() > 24)
            resolve_parity();
        return;
    }
    const std::size_t prev = halfpos_;
    halfpos_ += steps;
    if (steps == 2 && halfpos_ % 2 == 0) {
        // a full-period interval must land on a mid-bit; trust it and resync
        result_.anomalies.push_back(halfpos_ / 2);
        ++halfpos_;
    }
    if (steps > 2)
        result_.anomalies.push_back(prev / 2);
    emit(t_ns, rising, halfpos_);
}

void ManchesterDecoder::resolve_parity() {
    if (pending_.empty())
        return;
    // classify the buffered intervals with the settled rate estimate
    std::vector<std::size_t> steps(pending_.size(), 0);
    for (std::size_t i = 1; i < pending_.size(); ++i) {
        const double delta = pending_[i].first - pending_[i - 1].first;
        const double ratio = delta / t_est_half_ns_;
        steps[i] = ratio < 1.5 ? 1 : (ratio < 2.5 ? 2 : static_cast<std::size_t>(std::lround(ratio)));
    }
    // a full-period interval connects two mid-bit transitions; use the first
    // one as the phase anchor, else assume the stream began on a bit boundary
    std::size_t pos0 = 1;
    std::size_t acc = 0;
    for (std::size_t i = 1; i < pending_.size(); ++i) {
        acc += steps[i];
        if (steps[i] == 2) {
            if ((pos0 + acc) % 2 == 0)
                pos0 += 1;
            break;
        }
    }
    parity_fixed_ = true;
    halfpos_ = pos0;
    emit(pending_[0].first, pending_[0].second, halfpos_);
    for (std::size_t i = 1; i < pending_.size(); ++i) {
        halfpos_ += steps[i];
        emit(pending_[i].first, pending_[i].second, halfpos_);
    }
    pending_.clear();
}

void ManchesterDecoder::emit(double t_ns, bool rising, std::size_t halfpos) {
    if (halfpos % 2 == 0)
        return; // boundary transition, no data
    const std::size_t bit_index = (halfpos - 1) / 2;
    if (result_.bits.empty()) {
        next_bit_index_ = bit_index; // decoding starts at the first visible bit
    }
    while (next_bit_index_ < bit_index) {
        // a bit with no mid transition: fill it, flag it, and flywheel the
        // recovered clock through the gap
        result_.bits.push_back(0);
        result_.anomalies.push_back(next_bit_index_);
        result_.clock_edges_ns.push_back(result_.clock_edges_ns.empty()
                                             ? t_ns
                                             : result_.clock_edges_ns.back() +
                                                   2.0 * t_est_half_ns_);
        ++next_bit_index_;
    }
    if (bit_index < next_bit_index_)
        return; // duplicate mid within one bit: ignore
    result_.bits.push_back(rising ? 1 : 0);
    result_.clock_edges_ns.push_back(t_ns);
    ++next_bit_index_;
}

ManchesterResult ManchesterDecoder::finish() {
    if (!parity_fixed_)
        resolve_parity();
    if (result_.clock_edges_ns.empty())
        result_.loss_of_signal = true;
    if (result_.clock_edges_ns.size() >= 2) {
        const double span =
            result_.clock_edges_ns.back() - result_.clock_edges_ns.front();
        if (span > 0.0)
            result_.recovered_bitrate_kbps =
                1e6 * (static_cast<double>(result_.clock_edges_ns.size()) - 1.0) / span;
    }
    return std::move(result_);
}

ManchesterResult manchester_decode(const Waveform& levels, double expected_bitrate_kbps,
                                   double threshold) {
    ManchesterDecoder dec(expected_bitrate_kbps, threshold);
    dec.feed(levels);
    return dec.finish();
}

Waveform ask_modulate(const SymbolStream& symbols, const AskParams& params) {
    if (symbols.levels.empty())
        throw ValidationError("cannot modulate an empty symbol stream");
    if (!(params.p_high_mw > params.p_low_mw) || params.p_low_mw < 0.0)
        throw ValidationError("ASK levels must satisfy p_high > p_low >= 0");
    if (params.edge_time_ns <= 0.0)
        throw ValidationError("edge time must be positive");
    if (params.sample_period_ns > params.edge_time_ns / 5.0)
        throw ValidationError("sample period must resolve the optical edges (<= edge/5)");

    const double half_ns = symbols.half_period_ns();
    const double dt = params.sample_period_ns;
    const std::size_t n_samples =
        static_cast<std::size_t>(std::ceil(half_ns * static_cast<double>(symbols.levels.size()) / dt));
    const double tau = params.edge_time_ns / std::log(9.0); // 10-90% convention
    const double k = -std::expm1(-dt / tau);

    Waveform out;
    out.dt_ns = dt;
    out.samples.resize(n_samples);
    double y = symbols.levels.front() ? params.p_high_mw : params.p_low_mw;
    for (std::size_t i = 0; i < n_samples; ++i) {
        std::size_t sym = static_cast<std::size_t>(out.time_ns(i) / half_ns);
        sym = std::min(sym, symbols.levels.size() - 1);
        const double target = symbols.levels[sym] ? params.p_high_mw : params.p_low_mw;
        y += (target - y) * k;
        out.samples[i] = y;
    }
    return out;
}

std::vector<ScannedFrame> scan_frames(const std::vector<std::uint8_t>& bits) {
    std::vector<ScannedFrame> out;
    const std::size_t n = bits.size();
    std::size_t i = 0;
    while (i + static_cast<std::size_t>(kMinFrameBits) <= n) {
        bool alternating = true;
        for (int b = 1; b < kPreambleBits && alternating; ++b)
            alternating = bits[i + static_cast<std::size_t>(b)] !=
                          bits[i + static_cast<std::size_t>(b) - 1];
        if (!alternating || read_byte(bits, i + 16) != kSyncWord) {
            ++i;
            continue;
        }
        const std::size_t len = read_byte(bits, i + 32);
        std::size_t total = 48 + 8 * len;
        if (len > kMaxPayload || i + total > n)
            total = static_cast<std::size_t>(kMinFrameBits); // let decode report the error
        if (i + total > n)
            break;
        BitStream slice;
        slice.bits.assign(bits.begin() + static_cast<std::ptrdiff_t>(i),
                          bits.begin() + static_cast<std::ptrdiff_t>(i + total));
        ScannedFrame sf;
        sf.start_bit = i;
        sf.end_bit = i + total;
        sf.result = frame_decode(slice);
        out.push_back(sf);
        i = sf.result.ok() ? sf.end_bit : i + 1;
    }
    return out;
}

namespace {

std::size_t hamming(const std::vector<std::uint8_t>& a, std::size_t ai,
                    const std::vector<std::uint8_t>& b, std::size_t bi, std::size_t n) {
    std::size_t errors = 0;
    for (std::size_t i = 0; i < n; ++i)
        errors += (a[ai + i] & 1u) != (b[bi + i] & 1u);
    return errors;
}

} // namespace

BerResult ber_measure(const BitStream& tx, const BitStream& rx) {
    BerResult res;
    if (tx.bits.empty() || rx.bits.empty())
        throw ValidationError("BER needs nonempty streams");
    if (tx.bits.size() == rx.bits.size()) {
        res.compared = tx.bits.size();
        res.errors = hamming(tx.bits, 0, rx.bits, 0, res.compared);
        res.ber = static_cast<double>(res.errors) / static_cast<double>(res.compared);
        return res;
    }
    // Align the shorter stream inside the longer one by exact match of its
    // leading bits; if the anchor is ambiguous (idle filler), minimise the
    // total distance over the overlap.
    const bool rx_shorter = rx.bits.size() < tx.bits.size();
    const auto& longer = rx_shorter ? tx.bits : rx.bits;
    const auto& shorter = rx_shorter ? rx.bits : tx.bits;
    const std::size_t anchor = std::min<std::size_t>(48, shorter.size());
    std::size_t best_offset = longer.size();
    std::size_t best_errors = 0;
    for (std::size_t off = 0; off + shorter.size() <= longer.size(); ++off) {
        if (hamming(longer, off, shorter, 0, anchor) != 0)
            continue;
        const std::size_t errors = hamming(longer, off, shorter, 0, shorter.size());
        if (best_offset == longer.size() || errors < best_errors) {
            best_offset = off;
            best_errors = errors;
        }
    }
    if (best_offset == longer.size())
        throw ValidationError("BER alignment failure: no anchor match");
    res.compared = shorter.size();
    res.errors = best_errors;
    res.ber = static_cast<double>(res.errors) / static_cast<double>(res.compared);
    res.offset = rx_shorter ? static_cast<std::ptrdiff_t>(best_offset)
                            : -static_cast<std::ptrdiff_t>(best_offset);
    return res;
}

std::string bits_to_hex(const BitStream& bits) {
    std::ostringstream out;
    out << bits.bits.size() << ":";
    std::uint8_t nibble = 0;
    int fill = 0;
    for (std::size_t i = 0; i < bits.bits.size(); ++i) {
        nibble = static_cast<std::uint8_t>((nibble << 1) | (bits.bits[i] & 1u));
        if (++fill == 4) {
            out << "0123456789ABCDEF"[nibble];
            nibble = 0;
            fill = 0;
        }
    }
    if (fill > 0)
        out << "0123456789ABCDEF"[nibble << (4 - fill)];
    return out.str();
}

BitStream bits_from_hex(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ValidationError("hex bitstream needs an 'nbits:' prefix");
    const std::size_t nbits = std::stoul(text.substr(0, colon));
    BitStream out;
    out.bits.reserve(nbits);
    for (std::size_t i = colon + 1; i < text.size() && out.bits.size() < nbits; ++i) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c)))
            continue;
        int v;
        if (c >= '0' && c <= '9')
            v = c - '0';
        else if (c >= 'A' && c <= 'F')
            v = c - 'A' + 10;
        else if (c >= 'a' && c <= 'f')
            v = c - 'a' + 10;
        else
            throw ValidationError("invalid hex digit in bitstream");
        for (int b = 3; b >= 0 && out.bits.size() < nbits; --b)
            out.bits.push_back(static_cast<std::uint8_t>((v >> b) & 1));
    }
    if (out.bits.size() != nbits)
        throw ValidationError("hex bitstream shorter than its declared bit count");
    return out;
}

} // namespace retisim::telemetry

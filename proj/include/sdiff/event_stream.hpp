#pragma once

// Time-tagged photon records and their on-disk formats.
//
// Binary layout (little endian): a 16-byte header
//   char magic[8] = "SDIFFEVT", u32 version = 1, u32 record_size = 16
// followed by 16-byte records
//   u64 time_ns, u32 pulse_index, u16 channel, u8 origin, u8 pad.
// CSV: header row `time_ns,pulse_index,channel,origin`.

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdiff {

enum class Origin : std::uint8_t { signal = 0, background = 1, unknown = 255 };

inline const char* to_string(Origin o) noexcept {
  switch (o) {
    case Origin::signal: return "signal";
    case Origin::background: return "background";
    default: return "unknown";
  }
}

struct PhotonRecord {
  std::uint64_t time_ns = 0;
  std::uint32_t pulse_index = 0;
  std::uint16_t channel = 0;
  Origin origin = Origin::unknown;  ///< simulation truth; stripped before inference

  friend bool operator==(const PhotonRecord&, const PhotonRecord&) = default;
};

struct EventStream {
  std::vector<PhotonRecord> records;
  std::uint64_t n_pulses = 0;  ///< total pulses fired; 0 if unknown
};

/// Copy of the stream with the origin field hidden.
inline EventStream strip_origin(EventStream stream) {
  for (auto& r : stream.records) r.origin = Origin::unknown;
  return stream;
}

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<char, 8> kStreamMagic{'S', 'D', 'I', 'F', 'F', 'E', 'V', 'T'};
inline constexpr std::uint32_t kStreamVersion = 1;
inline constexpr std::size_t kRecordSize = 16;

namespace detail {
template <class T>
void put_le(unsigned char* out, T value) noexcept {
  for (std::size_t i = 0; i < sizeof(T); ++i) out[i] = static_cast<unsigned char>(value >> (8 * i));
}
template <class T>
T get_le(const unsigned char* in) noexcept {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(in[i]) << (8 * i);
  return value;
}

inline Origin parse_origin(const std::string& s) {
  if (s == "signal" || s == "0") return Origin::signal;
  if (s == "background" || s == "1") return Origin::background;
  if (s == "unknown" || s == "255" || s.empty()) return Origin::unknown;
  throw FormatError("bad origin field '" + s + "'");
}
}  // namespace detail

enum class StreamFormat { binary, csv };

/// Incremental writer; records must arrive in time order.
class EventWriter {
 public:
  EventWriter(std::ostream& out, StreamFormat format) : out_(out), format_(format) {
    if (format_ == StreamFormat::binary) {
      std::array<unsigned char, 16> header{};
      std::memcpy(header.data(), kStreamMagic.data(), 8);
      detail::put_le<std::uint32_t>(header.data() + 8, kStreamVersion);
      detail::put_le<std::uint32_t>(header.data() + 12, kRecordSize);
      out_.write(reinterpret_cast<const char*>(header.data()), header.size());
    } else {
      out_ << "time_ns,pulse_index,channel,origin\n";
    }
  }

  void write(const PhotonRecord& r) {
    if (format_ == StreamFormat::binary) {
      std::array<unsigned char, kRecordSize> buf{};
      detail::put_le<std::uint64_t>(buf.data(), r.time_ns);
      detail::put_le<std::uint32_t>(buf.data() + 8, r.pulse_index);
      detail::put_le<std::uint16_t>(buf.data() + 12, r.channel);
      buf[14] = static_cast<unsigned char>(r.origin);
      out_.write(reinterpret_cast<const char*>(buf.data()), buf.size());
    } else {
      out_ << r.time_ns << ',' << r.pulse_index << ',' << r.channel << ',' << to_string(r.origin) << '\n';
    }
  }

  void write(const std::vector<PhotonRecord>& records) {
    for (const auto& r : records) write(r);
  }

 private:
  std::ostream& out_;
  StreamFormat format_;
};

/// Incremental reader.  The format is sniffed from the first bytes.
class EventReader {
 public:
  explicit EventReader(std::istream& in) : in_(in) {
    std::array<char, 8> head{};
    in_.read(head.data(), head.size());
    if (in_.gcount() == 8 && head == kStreamMagic) {
      format_ = StreamFormat::binary;
      std::array<unsigned char, 8> rest{};
      in_.read(reinterpret_cast<char*>(rest.data()), rest.size());
      if (in_.gcount() != 8) throw FormatError("truncated stream header");
      const auto version = detail::get_le<std::uint32_t>(rest.data());
      const auto size = detail::get_le<std::uint32_t>(rest.data() + 4);
      if (version != kStreamVersion) throw FormatError("unsupported stream version " + std::to_string(version));
      if (size != kRecordSize) throw FormatError("unexpected record size " + std::to_string(size));
      return;
    }
    format_ = StreamFormat::csv;
    std::string line(head.data(), static_cast<std::size_t>(in_.gcount()));
    in_.clear();
    std::string rest;
    std::getline(in_, rest);
    line += rest;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "time_ns,pulse_index,channel,origin")
      throw FormatError(line.empty() ? "empty event stream" : "not an event stream: bad header");
  }

  StreamFormat format() const noexcept { return format_; }

  std::optional<PhotonRecord> next() {
    if (format_ == StreamFormat::binary) {
      std::array<unsigned char, kRecordSize> buf{};
      in_.read(reinterpret_cast<char*>(buf.data()), buf.size());
      if (in_.gcount() == 0) return std::nullopt;
      if (static_cast<std::size_t>(in_.gcount()) != kRecordSize) throw FormatError("truncated record");
      PhotonRecord r;
      r.time_ns = detail::get_le<std::uint64_t>(buf.data());
      r.pulse_index = detail::get_le<std::uint32_t>(buf.data() + 8);
      r.channel = detail::get_le<std::uint16_t>(buf.data() + 12);
      r.origin = static_cast<Origin>(buf[14]);
      return r;
    }
    std::string line;
    while (std::getline(in_, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::istringstream fields(line);
      std::string t, p, c, o;
      if (!std::getline(fields, t, ',') || !std::getline(fields, p, ',') || !std::getline(fields, c, ','))
        throw FormatError("malformed CSV record '" + line + "'");
      std::getline(fields, o);
      PhotonRecord r;
      try {
        r.time_ns = std::stoull(t);
        r.pulse_index = static_cast<std::uint32_t>(std::stoul(p));
        r.channel = static_cast<std::uint16_t>(std::stoul(c));
      } catch (const std::exception&) {
        throw FormatError("malformed CSV record '" + line + "'");
      }
      r.origin = detail::parse_origin(o);
      return r;
    }
    return std::nullopt;
  }

 private:
  std::istream& in_;
  StreamFormat format_ = StreamFormat::binary;
};

inline void write_stream(std::ostream& out, const EventStream& stream, StreamFormat format) {
  EventWriter writer(out, format);
  writer.write(stream.records);
}

inline EventStream read_stream(std::istream& in) {
  EventReader reader(in);
  EventStream stream;
  while (auto r = reader.next()) stream.records.push_back(*r);
  if (!stream.records.empty()) stream.n_pulses = stream.records.back().pulse_index + 1ull;
  return stream;
}

}  // namespace sdiff

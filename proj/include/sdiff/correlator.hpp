#pragma once

// Pulse-resolved coincidence histograms normalized to their long-lag
// plateau.  A pair of detections in pulses i < j contributes to lag j - i.
// Lags that no pair of pulses can realise under the stream's channel pattern
// (e.g. even lags between two alternating lasers) are omitted from curves.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdiff/event_stream.hpp"
#include "sdiff/parallel.hpp"

namespace sdiff {

struct LagWindow {
  long first = 200;
  long last = 400;
};

struct CorrelationCurve {
  std::vector<long> lags;
  std::vector<double> values;
  std::vector<double> std_errors;
  std::vector<std::uint64_t> counts;  ///< raw coincidences per lag (empty when read from CSV)
  double normalization = 0.0;         ///< plateau coincidences per pulse pair

  std::size_t size() const noexcept { return lags.size(); }

  std::optional<std::size_t> index_of(long lag) const {
    auto it = std::find(lags.begin(), lags.end(), lag);
    if (it == lags.end()) return std::nullopt;
    return static_cast<std::size_t>(it - lags.begin());
  }
};

/// Remove a background fraction: (C - beta) / (1 - beta).
inline CorrelationCurve background_corrected(CorrelationCurve curve, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("background_corrected: beta outside [0, 1)");
  for (std::size_t i = 0; i < curve.size(); ++i) {
    curve.values[i] = (curve.values[i] - beta) / (1.0 - beta);
    curve.std_errors[i] /= 1.0 - beta;
  }
  return curve;
}

namespace detail {
struct ChannelStats {
  std::uint64_t events = 0;
  std::uint32_t first = 0;
  std::uint32_t spacing = 0;  // gcd of pulse-index differences (0 for a single pulse)

  void add(std::uint32_t pulse) {
    if (events++ == 0) {
      first = pulse;
      return;
    }
    spacing = std::gcd(spacing, pulse > first ? pulse - first : first - pulse);
  }
  void merge(const ChannelStats& o) {
    if (o.events == 0) return;
    if (events == 0) {
      *this = o;
      return;
    }
    spacing = std::gcd(std::gcd(spacing, o.spacing), o.first > first ? o.first - first : first - o.first);
    first = std::min(first, o.first);
    events += o.events;
  }
  std::uint32_t residue() const { return spacing ? first % spacing : first; }
};
}  // namespace detail

/// Streaming coincidence counter.  Memory is bounded by the number of
/// events within `max_lag` pulses.  In autocorrelation mode all events are
/// paired; in cross mode only channel a -> channel b pairs (positive lags)
/// and b -> a pairs (negative lags) are counted.
class CoincidenceCounter {
 public:
  explicit CoincidenceCounter(long max_lag) : max_lag_(check_lag(max_lag)), counts_(2 * max_lag_ + 1, 0) {}

  CoincidenceCounter(long max_lag, std::uint16_t channel_a, std::uint16_t channel_b)
      : max_lag_(check_lag(max_lag)), counts_(2 * max_lag_ + 1, 0), cross_(true), a_(channel_a), b_(channel_b) {}

  void add(const PhotonRecord& r) { push(r, true); }

  /// Remember an event for pairing without counting it (partition overlap).
  void add_context(const PhotonRecord& r) { push(r, false); }

  void merge(const CoincidenceCounter& o) {
    if (o.max_lag_ != max_lag_ || o.cross_ != cross_ || o.a_ != a_ || o.b_ != b_)
      throw std::invalid_argument("CoincidenceCounter::merge: incompatible counters");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
    same_pulse_ += o.same_pulse_;
    cross_same_pulse_ += o.cross_same_pulse_;
    for (const auto& [ch, st] : o.channels_) channels_[ch].merge(st);
    if (o.total_events_) {
      min_pulse_ = total_events_ ? std::min(min_pulse_, o.min_pulse_) : o.min_pulse_;
      max_pulse_ = total_events_ ? std::max(max_pulse_, o.max_pulse_) : o.max_pulse_;
    }
    total_events_ += o.total_events_;
  }

  /// Number of pulses the stream spans; defaults to the observed range.
  void set_total_pulses(std::uint64_t n) { total_pulses_ = n; }

  std::uint64_t events() const noexcept { return total_events_; }
  bool has_channel(std::uint16_t ch) const { return channels_.count(ch) > 0; }
  std::uint64_t channel_events(std::uint16_t ch) const {
    auto it = channels_.find(ch);
    return it == channels_.end() ? 0 : it->second.events;
  }

  CorrelationCurve finish(const LagWindow& window) const {
    if (window.first < 1 || window.last < window.first || window.last > max_lag_)
      throw std::invalid_argument("correlator: long-lag window must satisfy 1 <= first <= last <= max_lag");
    if (cross_ && (!has_channel(a_) || !has_channel(b_)))
      throw std::invalid_argument("correlator: channel missing from stream");
    if (total_events_ < 2) throw std::invalid_argument("correlator: need at least two events");

    const double span = total_pulses_ ? static_cast<double>(total_pulses_)
                                      : static_cast<double>(max_pulse_ - min_pulse_) + 1.0;
    const auto [modulus, offset] = lag_lattice();
    auto possible = [&, m = modulus, d = offset](long lag) {
      if (m == 0) return lag == d;
      return ((lag - d) % m + m) % m == 0;
    };
    auto weight = [&](long lag) { return span - static_cast<double>(std::labs(lag)); };

    double plateau = 0.0;
    int plateau_lags = 0;
    for (long lag = window.first; lag <= window.last; ++lag)
      for (long signed_lag : cross_ ? std::vector<long>{lag, -lag} : std::vector<long>{lag})
        if (possible(signed_lag) && weight(signed_lag) > 0.0) {
          plateau += static_cast<double>(count_at(signed_lag)) / weight(signed_lag);
          ++plateau_lags;
        }
    if (plateau_lags == 0) throw std::invalid_argument("correlator: long-lag window contains no usable lags");
    plateau /= plateau_lags;
    if (!(plateau > 0.0)) throw std::invalid_argument("correlator: no coincidences in the long-lag window");

    CorrelationCurve curve;
    curve.normalization = plateau;
    auto emit = [&](long lag, double count, double expected_scale) {
      const double w = weight(lag) * expected_scale;
      curve.lags.push_back(lag);
      curve.counts.push_back(static_cast<std::uint64_t>(count));
      curve.values.push_back(count / w / plateau);
      curve.std_errors.push_back(std::sqrt(std::max(count, 1.0)) / w / plateau);
    };
    const long lo = cross_ ? -max_lag_ : 0;
    for (long lag = lo; lag <= max_lag_; ++lag) {
      if (!possible(lag) || weight(lag) <= 0.0) continue;
      if (lag != 0) {
        emit(lag, static_cast<double>(count_at(lag)), 1.0);
      } else if (cross_) {
        if (a_ != b_) emit(0, static_cast<double>(count_at(0)), 1.0);
      } else if (hanbury_brown_twiss()) {
        const auto it = channels_.begin();
        const double fa = static_cast<double>(it->second.events) / static_cast<double>(total_events_);
        const double fb = 1.0 - fa;
        emit(0, static_cast<double>(cross_same_pulse_), 2.0 * fa * fb);
      } else {
        emit(0, static_cast<double>(same_pulse_), 1.0);
      }
    }
    return curve;
  }

  /// Two detector channels sharing the same pulses: lag 0 then uses only
  /// cross-channel pairs.
  bool hanbury_brown_twiss() const {
    if (cross_ || channels_.size() != 2) return false;
    const auto& x = channels_.begin()->second;
    const auto& y = std::next(channels_.begin())->second;
    return x.spacing == y.spacing && x.residue() == y.residue();
  }

 private:
  struct Event {
    std::uint32_t pulse;
    std::uint16_t channel;
  };

  static long check_lag(long max_lag) {
    if (max_lag < 1) throw std::invalid_argument("CoincidenceCounter: max_lag must be >= 1");
    return max_lag;
  }

  std::uint64_t count_at(long lag) const { return counts_[static_cast<std::size_t>(lag + max_lag_)]; }

  // Lags realisable between the paired channels: offset + k * modulus.
  std::pair<long, long> lag_lattice() const {
    if (!cross_) {
      std::uint32_t g = 0;
      std::uint32_t first = 0;
      bool seen = false;
      for (const auto& [ch, st] : channels_) {
        if (!seen) {
          first = st.first;
          g = st.spacing;
          seen = true;
        } else {
          g = std::gcd(std::gcd(g, st.spacing), st.first > first ? st.first - first : first - st.first);
        }
      }
      return {static_cast<long>(g), 0};
    }
    const auto& sa = channels_.at(a_);
    const auto& sb = channels_.at(b_);
    const long offset = static_cast<long>(sb.first) - static_cast<long>(sa.first);
    long g = std::gcd(static_cast<long>(sa.spacing), static_cast<long>(sb.spacing));
    if (g == 0) return {0, offset};
    return {g, ((offset % g) + g) % g};
  }

  void push(const PhotonRecord& r, bool count) {
    if (cross_ && r.channel != a_ && r.channel != b_) return;
    if (!recent_.empty() && r.pulse_index < recent_.back().pulse)
      throw std::invalid_argument("correlator: events must be ordered by pulse index");
    while (!recent_.empty() && static_cast<long>(r.pulse_index - recent_.front().pulse) > max_lag_)
      recent_.pop_front();
    if (count) {
      for (const auto& e : recent_) {
        const long lag = static_cast<long>(r.pulse_index - e.pulse);
        if (!cross_) {
          if (lag == 0) {
            same_pulse_ += 2;
            if (e.channel != r.channel) cross_same_pulse_ += 2;
          } else {
            ++counts_[static_cast<std::size_t>(lag + max_lag_)];
          }
          continue;
        }
        if (lag == 0) {
          if (a_ != b_ && e.channel != r.channel) ++counts_[static_cast<std::size_t>(max_lag_)];
          continue;
        }
        if (e.channel == a_ && r.channel == b_) ++counts_[static_cast<std::size_t>(max_lag_ + lag)];
        if (e.channel == b_ && r.channel == a_) ++counts_[static_cast<std::size_t>(max_lag_ - lag)];
      }
      channels_[r.channel].add(r.pulse_index);
      if (total_events_ == 0) min_pulse_ = r.pulse_index;
      max_pulse_ = std::max(max_pulse_, r.pulse_index);
      min_pulse_ = std::min(min_pulse_, r.pulse_index);
      ++total_events_;
    }
    recent_.push_back({r.pulse_index, r.channel});
  }

  long max_lag_;
  std::vector<std::uint64_t> counts_;  // index lag + max_lag
  bool cross_ = false;
  std::uint16_t a_ = 0;
  std::uint16_t b_ = 0;
  std::deque<Event> recent_;
  std::uint64_t same_pulse_ = 0;        // ordered same-pulse pairs
  std::uint64_t cross_same_pulse_ = 0;  // ordered same-pulse pairs on distinct channels
  std::map<std::uint16_t, detail::ChannelStats> channels_;
  std::uint32_t min_pulse_ = 0;
  std::uint32_t max_pulse_ = 0;
  std::uint64_t total_events_ = 0;
  std::uint64_t total_pulses_ = 0;
};

struct CorrelateOptions {
  LagWindow window{};
  long max_lag = 0;  ///< 0: window.last
  unsigned threads = 1;
};

namespace detail {
// Split the records into contiguous partitions; each partition counts the
// pairs whose later event it owns, seeded with the preceding max_lag pulses.
template <class MakeCounter>
CoincidenceCounter count_partitioned(const EventStream& stream, long max_lag, unsigned threads,
                                     MakeCounter make) {
  const auto& rec = stream.records;
  const std::size_t parts = std::max<std::size_t>(1, std::min<std::size_t>(threads, rec.size() / 4096 + 1));
  CoincidenceCounter total = make();
  ordered_chunks(
      parts, threads,
      [&](std::size_t k) {
        CoincidenceCounter c = make();
        const std::size_t begin = rec.size() * k / parts;
        const std::size_t end = rec.size() * (k + 1) / parts;
        std::size_t ctx = begin;
        if (begin < rec.size()) {
          const long start_pulse = static_cast<long>(rec[begin].pulse_index);
          while (ctx > 0 && start_pulse - static_cast<long>(rec[ctx - 1].pulse_index) <= max_lag) --ctx;
        }
        for (std::size_t i = ctx; i < begin; ++i) c.add_context(rec[i]);
        for (std::size_t i = begin; i < end; ++i) c.add(rec[i]);
        return c;
      },
      [&](CoincidenceCounter&& c) { total.merge(c); });
  if (stream.n_pulses) total.set_total_pulses(stream.n_pulses);
  return total;
}
}  // namespace detail

/// Pulsed g2(N) for N = 0 .. max_lag.
inline CorrelationCurve g2_pulsed(const EventStream& stream, const CorrelateOptions& opt = {}) {
  const long max_lag = opt.max_lag ? opt.max_lag : opt.window.last;
  if (stream.records.size() < 2) throw std::invalid_argument("g2_pulsed: need at least two events");
  auto counter = detail::count_partitioned(stream, max_lag, opt.threads, [&] { return CoincidenceCounter(max_lag); });
  return counter.finish(opt.window);
}

/// Cross-correlation of channel_b detections following channel_a detections
/// (positive lags) and preceding them (negative lags).
inline CorrelationCurve two_colour_correlate(const EventStream& stream, std::uint16_t channel_a,
                                             std::uint16_t channel_b, const CorrelateOptions& opt = {}) {
  const long max_lag = opt.max_lag ? opt.max_lag : opt.window.last;
  auto counter = detail::count_partitioned(stream, max_lag, opt.threads,
                                           [&] { return CoincidenceCounter(max_lag, channel_a, channel_b); });
  return counter.finish(opt.window);
}

// ---------------------------------------------------------------------------
// CSV: lag,value,stderr

inline void write_curve_csv(std::ostream& out, const CorrelationCurve& c) {
  out << "lag,value,stderr\n";
  out.precision(12);
  for (std::size_t i = 0; i < c.size(); ++i) out << c.lags[i] << ',' << c.values[i] << ',' << c.std_errors[i] << '\n';
}

inline CorrelationCurve read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty correlation file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "lag,value,stderr") throw FormatError("correlation CSV must start with 'lag,value,stderr'");
  CorrelationCurve c;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string l, v, e;
    if (!std::getline(fields, l, ',') || !std::getline(fields, v, ',') || !std::getline(fields, e))
      throw FormatError("malformed correlation row '" + line + "'");
    try {
      c.lags.push_back(std::stol(l));
      c.values.push_back(std::stod(v));
      c.std_errors.push_back(std::stod(e));
    } catch (const std::exception&) {
      throw FormatError("malformed correlation row '" + line + "'");
    }
  }
  c.normalization = 1.0;
  return c;
}

}  // namespace sdiff

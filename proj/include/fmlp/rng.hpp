#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (seed, stream tag, index, block), computed
// with the Philox4x32-10 bijection. Two streams with different tags or
// indices never share a counter, so results do not depend on the order in
// which curves, noise terms or restarts are generated.

#include <array>
#include <cstdint>
#include <optional>

namespace fmlp {

struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

/// What a stream is used for. The purpose occupies the high byte of the
/// stream tag, the low 24 bits carry a caller-chosen sub-stream.
enum class StreamPurpose : std::uint32_t {
  CurveCoefficients = 1,
  Noise = 2,
  SamplingGrid = 3,
  WeightInit = 4,
  Fuzz = 5,
};

struct StreamId {
  std::uint32_t tag = 0;
  std::uint64_t index = 0;

  static constexpr std::uint32_t kMaxSubstream = (1u << 24) - 1;

  static StreamId make(StreamPurpose purpose, std::uint32_t substream, std::uint64_t index);

  [[nodiscard]] StreamPurpose purpose() const noexcept {
    return static_cast<StreamPurpose>(tag >> 24);
  }
  [[nodiscard]] std::uint32_t substream() const noexcept { return tag & kMaxSubstream; }

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// Sequential reader over one Philox stream. Counter layout:
/// word 0 = block number, word 1 = tag, words 2-3 = index; key = seed.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamId id) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;

 private:
  Philox4x32::Key key_;
  Philox4x32::Counter counter_;
  Philox4x32::Counter buffer_{};
  int buffered_words_ = 0;
  std::optional<double> spare_normal_;
};

}  // namespace fmlp

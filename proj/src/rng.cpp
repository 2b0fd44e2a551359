#include "fmlp/rng.hpp"

#include <cmath>
#include <numbers>

#include "fmlp/error.hpp"

namespace fmlp {
namespace {

constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;
constexpr std::uint32_t kMultA = 0xD2511F53;
constexpr std::uint32_t kMultB = 0xCD9E8D57;
constexpr int kRounds = 10;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(product);
  hi = static_cast<std::uint32_t>(product >> 32);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
  for (int round = 0; round < kRounds; ++round) {
    if (round > 0) {
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMultA, ctr[0], lo0, hi0);
    mulhilo(kMultB, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

StreamId StreamId::make(StreamPurpose purpose, std::uint32_t substream, std::uint64_t index) {
  if (substream > kMaxSubstream) {
    throw Error(ErrorCode::InvalidArgument, "random sub-stream exceeds 24 bits");
  }
  return StreamId{(static_cast<std::uint32_t>(purpose) << 24) | substream, index};
}

RandomStream::RandomStream(std::uint64_t seed, StreamId id) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0, id.tag, static_cast<std::uint32_t>(id.index),
               static_cast<std::uint32_t>(id.index >> 32)} {}

std::uint64_t RandomStream::next_u64() noexcept {
  if (buffered_words_ == 0) {
    buffer_ = Philox4x32::generate(counter_, key_);
    ++counter_[0];
    buffered_words_ = 4;
  }
  const int base = 4 - buffered_words_;
  buffered_words_ -= 2;
  return (static_cast<std::uint64_t>(buffer_[base]) << 32) | buffer_[base + 1];
}

double RandomStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() noexcept {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

}  // namespace fmlp

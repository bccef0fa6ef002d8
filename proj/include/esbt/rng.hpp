#pragma once

#include <array>
#include <cstdint>

namespace esbt {

/// Philox4x32-10 block function. Exposed for known-answer testing.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream. The key is the seed; the upper half of the
/// counter is the stream id, the lower half walks through blocks. Two streams
/// with the same (seed, stream_id) produce the same sequence everywhere, and
/// streams never share state, so they can be handed out per task.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();

  /// Standard normal draw (Box-Muller, second variate cached).
  double normal();

  /// Gamma(shape, 1) draw, Marsaglia-Tsang. shape > 0.
  double gamma(double shape);

private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace esbt

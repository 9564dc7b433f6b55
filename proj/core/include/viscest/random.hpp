#pragma once

#include <array>
#include <cstdint>

namespace viscest {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11): a keyed
/// bijection of a 128-bit counter. Output depends only on (key, counter).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key);
};

/// Deterministic standard-normal stream keyed by (seed, stream index).
///
/// Draw (step, mode) is a pure function of (seed, stream, step, mode):
/// Philox block (step, mode / 2, stream) yields two 53-bit uniforms that
/// the Box-Muller transform maps to the normals of modes 2m and 2m + 1.
/// Consequently the noise felt by mode j does not depend on how many modes
/// are simulated, and advancing `counter` is the only state change.
struct RandomStream {
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  std::uint64_t counter = 0;  // index of the next step to draw

  /// Standard normal for `mode` at the current counter.
  double normal(std::uint32_t mode) const { return normal_at(counter, mode); }
  double normal_at(std::uint64_t step, std::uint32_t mode) const;
  /// Normals of modes 2 * pair and 2 * pair + 1 at `step`.
  std::array<double, 2> normal_pair(std::uint64_t step, std::uint32_t pair) const;
};

/// Maps the top 53 bits of a 64-bit word to (0, 1].
double to_unit_interval(std::uint32_t hi, std::uint32_t lo);

}  // namespace viscest

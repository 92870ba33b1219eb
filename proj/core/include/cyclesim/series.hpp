#pragma once

#include <cstdint>
#include <vector>

namespace cyclesim {

/// Speed samples of one ride. Times are seconds relative to `origin_ms`
/// (the ride's first timestamp) and strictly increasing.
struct SpeedSeries {
  std::int64_t origin_ms = 0;
  std::vector<double> time_s;
  std::vector<double> speed;  // m/s

  std::size_t size() const noexcept { return speed.size(); }
  bool empty() const noexcept { return speed.empty(); }

  std::int64_t absolute_ms(std::size_t i) const;
};

}  // namespace cyclesim

#pragma once

#include <cstdint>
#include <string_view>

namespace efftemp {

/// Stateless counter-based generator: every draw is a pure function of
/// (seed, stream tag, counter), so sequences do not depend on call order,
/// platform or standard-library implementation.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view stream);

  std::uint64_t bits(std::uint64_t counter) const;
  // Uniform on (0, 1].
  double uniform(std::uint64_t counter) const;
  // Standard normal via Box-Muller on draws (2·counter, 2·counter + 1).
  double normal(std::uint64_t counter) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace efftemp

#include "embagg/parallel.hpp"

#include <cstdlib>
#include <string>

namespace embagg {

std::size_t resolve_worker_count(std::optional<std::size_t> requested) {
  std::size_t n = requested.value_or(std::thread::hardware_concurrency());
  if (n == 0) n = 1;
  if (const char* cap = std::getenv("EMBAGG_WORKERS")) {
    try {
      const auto v = std::stoul(cap);
      if (v > 0) n = std::min<std::size_t>(n, v);
    } catch (const std::exception&) {
      // an unparsable cap is ignored
    }
  }
  return n;
}

}  // namespace embagg

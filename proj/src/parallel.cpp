#include "sppf/parallel.hpp"

#include <cstdlib>
#include <string>

namespace sppf {

int resolve_threads(int requested) {
  int t = requested;
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  if (t <= 0) t = 1;
  if (const char* env = std::getenv("SPARSE_PPF_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1 && cap < t) t = cap;
    } catch (...) {
      // ignore unparsable values
    }
  }
  return t;
}

}  // namespace sppf

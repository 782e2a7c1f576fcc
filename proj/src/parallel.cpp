#include "ldsplan/parallel.hpp"

#include <cstdlib>
#include <string>

namespace ldsplan {

unsigned default_thread_count() {
  const char* env = std::getenv("LDSPLAN_THREADS");
  if (!env || !*env) return 1;
  try {
    const long v = std::stol(env);
    return v >= 1 ? static_cast<unsigned>(v) : 1u;
  } catch (...) {
    return 1;
  }
}

}  // namespace ldsplan

#include "focalspec/parallel.hpp"

#include <cstdlib>
#include <string>

namespace focalspec {

unsigned default_thread_count() {
    if (const char* env = std::getenv("FOCALSPEC_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n > 0) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace focalspec

#include "darnet/parallel.hpp"

#include <cstdlib>
#include <string>

#include "darnet/error.hpp"

namespace darnet {

int resolve_threads(std::optional<int> requested)
{
    if (requested) {
        if (*requested < 1)
            throw InvalidArgument("thread count must be at least 1");
        return *requested;
    }
    if (const char* env = std::getenv("DAR_THREADS"); env && *env) {
        try {
            const int n = std::stoi(env);
            if (n >= 1)
                return n;
        } catch (const std::exception&) {
        }
        throw InvalidArgument(std::string("DAR_THREADS must be a positive integer, got '") + env + "'");
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

} // namespace darnet

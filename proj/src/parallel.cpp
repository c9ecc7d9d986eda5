#include <gausskern/parallel.hpp>

#include <atomic>
#include <cstdlib>
#include <string>

namespace gausskern {

namespace {

std::atomic<int> configured{-1};

int resolve(int n)
{
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace

void set_threads(int n)
{
    configured = resolve(n);
}

int thread_count()
{
    int n = configured.load();
    if (n < 0) {
        int req = 0;
        if (const char* env = std::getenv("GAUSSKERN_THREADS")) {
            try {
                req = std::stoi(env);
            } catch (...) {
                req = 0;
            }
        }
        n = resolve(req);
        configured = n;
    }
    return n;
}

} // namespace gausskern

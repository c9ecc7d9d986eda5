#ifndef GAUSSKERN_PARALLEL_HPP
#define GAUSSKERN_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gausskern {

// 0 = auto. Reads GAUSSKERN_THREADS on first use.
void set_threads(int n);
int thread_count();

// Runs f(i) for i in [0, n). Each index is written by exactly one worker, so
// callers that store per-index results and reduce afterwards stay deterministic.
template <class F>
void parallel_for(std::size_t n, F&& f)
{
    int nt = thread_count();
    if (nt <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(nt), n);
    std::exception_ptr err;
    std::mutex m;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(m);
                if (!err) err = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// Pairwise sum with a fixed tree.
template <class T>
T tree_sum(const std::vector<T>& v, std::size_t lo, std::size_t hi)
{
    if (hi <= lo) return T(0);
    if (hi - lo == 1) return v[lo];
    std::size_t mid = lo + (hi - lo) / 2;
    return tree_sum(v, lo, mid) + tree_sum(v, mid, hi);
}

template <class T>
T tree_sum(const std::vector<T>& v)
{
    return tree_sum(v, 0, v.size());
}

} // namespace gausskern

#endif

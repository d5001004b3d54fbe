#ifndef GEOBEAM_PARALLEL_HPP
#define GEOBEAM_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace geobeam {

inline int resolve_jobs(int jobs) {
    if (jobs > 0)
        return jobs;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results must be written
// by index so that the merge is deterministic. The lowest-index exception wins.
template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    jobs = std::min<int>(resolve_jobs(jobs), static_cast<int>(std::max<std::size_t>(count, 1)));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr err;
    std::size_t err_index = count;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (err)
        std::rethrow_exception(err);
}

} // namespace geobeam

#endif

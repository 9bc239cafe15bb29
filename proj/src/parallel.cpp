#include "gramflow/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace gramflow {

int thread_count() {
    static const int count = [] {
        const char* env = std::getenv("GRAMFLOW_THREADS");
        if (!env) return 1;
        const int parsed = std::atoi(env);
        return std::clamp(parsed, 1, 64);
    }();
    return count;
}

void parallel_chunks(std::size_t total,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
    if (total == 0) return;
    const int workers = thread_count();
    if (workers <= 1) {
        fn(0, total);
        return;
    }
    // fixed chunk grid independent of the worker count
    const std::size_t chunks = std::min<std::size_t>(total, 64);
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    ranges.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c)
        ranges.emplace_back(total * c / chunks, total * (c + 1) / chunks);

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t c = static_cast<std::size_t>(t); c < ranges.size();
                 c += static_cast<std::size_t>(workers))
                fn(ranges[c].first, ranges[c].second);
        });
    }
    for (std::thread& th : pool) th.join();
}

}  // namespace gramflow

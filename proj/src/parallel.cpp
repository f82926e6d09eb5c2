#include "concurrence/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace concurrence {

void run_jobs(int n_jobs, int workers, const std::function<void(int)>& fn) {
    if (n_jobs <= 0) return;
    if (workers <= 1 || n_jobs == 1) {
        for (int i = 0; i < n_jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const int job = next.fetch_add(1);
            if (job >= n_jobs) return;
            try {
                fn(job);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const int n_threads = std::min(workers, n_jobs);
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

int default_workers() {
    if (const char* env = std::getenv("CONCURRENCE_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

}  // namespace concurrence

#include "autoens/hpo/scheduler.hpp"

#include "autoens/core/error.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace autoens {

SchedulePlan schedule_trials(std::span<const double> durations, int max_parallel_jobs) {
    if (max_parallel_jobs < 1) throw ValidationError("max_parallel_jobs must be >= 1");
    SchedulePlan plan;
    std::vector<double> free_at(static_cast<std::size_t>(max_parallel_jobs), 0.0);
    for (double d : durations) {
        if (d < 0.0) throw ValidationError("trial durations must be >= 0");
        const auto it = std::min_element(free_at.begin(), free_at.end());
        plan.worker.push_back(static_cast<int>(it - free_at.begin()));
        plan.start.push_back(*it);
        *it += d;
        plan.cost += d;
    }
    plan.latency = durations.empty() ? 0.0 : *std::max_element(free_at.begin(), free_at.end());
    return plan;
}

void run_parallel(std::size_t n, int max_parallel_jobs, const std::function<void(std::size_t)>& job) {
    if (max_parallel_jobs < 1) throw ValidationError("max_parallel_jobs must be >= 1");
    const std::size_t workers = std::min(n, static_cast<std::size_t>(max_parallel_jobs));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) job(i);
        });
    }
}

}  // namespace autoens

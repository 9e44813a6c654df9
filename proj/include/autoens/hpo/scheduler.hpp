#pragma once

#include <functional>
#include <span>
#include <vector>

namespace autoens {

struct SchedulePlan {
    std::vector<int> worker;     // worker index per trial
    std::vector<double> start;   // start time per trial
    double cost = 0.0;           // sum of durations
    double latency = 0.0;        // makespan
};

/// Greedy list schedule in submission order: each trial starts on the worker
/// that frees up first (lowest index on ties).
SchedulePlan schedule_trials(std::span<const double> durations, int max_parallel_jobs);

/// Runs jobs 0..n-1 on up to `max_parallel_jobs` threads; job(i) must be safe
/// to call concurrently for distinct i. Exceptions stay inside `job`.
void run_parallel(std::size_t n, int max_parallel_jobs, const std::function<void(std::size_t)>& job);

}  // namespace autoens

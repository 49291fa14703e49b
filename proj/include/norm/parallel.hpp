#pragma once

#include <cstddef>
#include <functional>

namespace norm {

// Worker cap for batch-parallel loops. Defaults to NORM_THREADS when set,
// otherwise 1. Results are bitwise reproducible for a fixed count.
int thread_count();
void set_thread_count(int n);

// Splits [0, n) into min(thread_count(), n) contiguous chunks and calls
// fn(chunk, begin, end) for each, concurrently when more than one.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

// Number of chunks parallel_chunks will use for n items.
std::size_t chunk_count(std::size_t n);

}  // namespace norm

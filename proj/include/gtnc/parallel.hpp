#pragma once

#include <cstddef>
#include <functional>

namespace gtnc {

/// Worker-thread budget: the TN_THREADS environment variable when set
/// (must be a positive integer), otherwise the hardware concurrency.
std::size_t worker_count();

/// Runs fn(begin, end) over contiguous chunks of [0, n) on up to
/// worker_count() threads. Chunk boundaries depend only on n and the worker
/// budget, so writes into per-index slots stay deterministic.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace gtnc

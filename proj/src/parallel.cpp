#include "gtnc/parallel.hpp"

#include <cstdlib>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "gtnc/errors.hpp"

namespace gtnc {

std::size_t worker_count() {
    if (const char* env = std::getenv("TN_THREADS")) {
        std::string s(env);
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(s, &pos);
        } catch (const std::exception&) {
            throw FormatError("TN_THREADS must be a positive integer, got '" + s + "'");
        }
        if (pos != s.size() || v == 0)
            throw FormatError("TN_THREADS must be a positive integer, got '" + s + "'");
        return static_cast<std::size_t>(v);
    }
    std::size_t hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t workers = worker_count();
    if (workers > n) workers = n;
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::future<void>> futures;
    futures.reserve(workers);
    std::size_t base = n / workers, extra = n % workers, begin = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t end = begin + base + (w < extra ? 1 : 0);
        futures.push_back(std::async(std::launch::async, fn, begin, end));
        begin = end;
    }
    for (auto& f : futures) f.get();
}

} // namespace gtnc

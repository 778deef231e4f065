#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>

namespace cqwalk {

/// Numerical failure that is not tied to a specific integration time
/// (e.g. divergent training). CLI maps these to exit code 2.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Write `content` to `path` via a temp file in the same directory plus
/// rename, so readers never observe a partially written file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Run fn(i) for i in [0, count) on `workers` threads. Results must be
/// stored by index by the callee; the schedule never affects the output.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace cqwalk

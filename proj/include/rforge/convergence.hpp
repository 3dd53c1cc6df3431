#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace rforge {

/// First index i (>= window - 1) whose trailing window of values has
/// max - min <= tol * max(1, |mean of the window|). Throws
/// Error("invalid_config") when window < 2.
[[nodiscard]] std::optional<std::size_t> detect_convergence(std::span<const double> history, std::size_t window,
                                                            double tol);

} // namespace rforge

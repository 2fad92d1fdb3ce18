// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace mvln {

// Worker count used by parallel_for. 0 selects hardware concurrency.
void set_num_threads(unsigned n);
unsigned num_threads();

/// Runs fn(i) for i in [0, n). Each index is executed exactly once; callers
/// must make fn(i) write only to memory owned by index i so results do not
/// depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mvln

// SPDX-License-Identifier: Apache-2.0
//
// capa-select: aperture selection for continuous aperture arrays
// Copyright (C) 2026 The capa-select authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace capa
{
    // Runs body(block) for every block index in [0, n_blocks). Blocks are handed out
    // dynamically, so callers must store per-block results and reduce them in block order
    // to stay independent of the thread count. The lowest-index exception is rethrown.
    template <typename Body>
    void for_each_block(std::size_t n_blocks, unsigned threads, Body &&body)
    {
        if (n_blocks == 0)
            return;
        threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_blocks)));
        if (threads == 1)
        {
            for (std::size_t b = 0; b < n_blocks; ++b)
                body(b);
            return;
        }

        std::vector<std::exception_ptr> errors(n_blocks);
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (std::size_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1))
            {
                try
                {
                    body(b);
                }
                catch (...)
                {
                    errors[b] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto &t : pool)
            t.join();
        for (auto &e : errors)
            if (e)
                std::rethrow_exception(e);
    }
}

// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "teso/core/bytes.hpp"

namespace teso {

/// Largest total frequency a model may present to the coder.
inline constexpr std::uint32_t kMaxTotalFrequency = 1u << 16;

/// 32-bit range encoder with carry propagation through a cached byte.
/// Symbol intervals are scaled multiply-first, so any frequency >= 1 out of
/// a total <= 2^16 gets a non-empty sub-range.
class RangeEncoder {
public:
    void encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total);
    /// Flushes the coder state. A coder that saw no symbols yields no bytes.
    Bytes finish();
    std::uint64_t symbol_count() const noexcept { return symbols_; }

private:
    void shift_low();

    std::uint64_t low_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
    std::uint8_t cache_ = 0;
    std::uint64_t cache_size_ = 1;
    std::uint64_t symbols_ = 0;
    Bytes out_;
};

class RangeDecoder {
public:
    explicit RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {}

    /// Scaled code value in [0, total); the caller maps it to a symbol and
    /// then calls consume with that symbol's interval. Throws StreamError
    /// when the input is exhausted or inconsistent.
    std::uint32_t target(std::uint32_t total);
    void consume(std::uint32_t cum, std::uint32_t freq, std::uint32_t total);

    std::size_t bytes_consumed() const noexcept { return pos_; }

private:
    std::uint8_t next();

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
    bool started_ = false;
    std::uint32_t code_ = 0;
    std::uint32_t range_ = 0xFFFFFFFFu;
};

}  // namespace teso

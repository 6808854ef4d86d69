// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/geocodec/range_coder.hpp"

#include "teso/core/errors.hpp"

namespace teso {
namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

void RangeEncoder::encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total) {
    if (freq == 0 || total > kMaxTotalFrequency || cum + freq > total)
        throw PreconditionError("range coder: invalid symbol interval");
    const std::uint64_t r = range_;
    const auto lo = static_cast<std::uint32_t>(r * cum / total);
    const auto hi = static_cast<std::uint32_t>(r * (cum + freq) / total);
    low_ += lo;
    range_ = hi - lo;
    while (range_ < kTop) {
        range_ <<= 8;
        shift_low();
    }
    ++symbols_;
}

void RangeEncoder::shift_low() {
    if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
        const auto carry = static_cast<std::uint8_t>(low_ >> 32);
        std::uint8_t temp = cache_;
        do {
            out_.push_back(static_cast<std::uint8_t>(temp + carry));
            temp = 0xFF;
        } while (--cache_size_ != 0);
        cache_ = static_cast<std::uint8_t>(low_ >> 24);
    }
    ++cache_size_;
    low_ = (low_ & 0x00FFFFFFu) << 8;
}

Bytes RangeEncoder::finish() {
    if (symbols_ == 0) return {};
    for (int i = 0; i < 5; ++i) shift_low();
    Bytes out = std::move(out_);
    *this = RangeEncoder();
    return out;
}

std::uint8_t RangeDecoder::next() {
    if (pos_ >= in_.size()) throw StreamError("range decoder ran out of input");
    return in_[pos_++];
}

std::uint32_t RangeDecoder::target(std::uint32_t total) {
    if (!started_) {
        for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next();
        started_ = true;
    }
    const std::uint64_t t = ((static_cast<std::uint64_t>(code_) + 1) * total - 1) / range_;
    if (t >= total) throw StreamError("range decoder state is inconsistent");
    return static_cast<std::uint32_t>(t);
}

void RangeDecoder::consume(std::uint32_t cum, std::uint32_t freq, std::uint32_t total) {
    const std::uint64_t r = range_;
    const auto lo = static_cast<std::uint32_t>(r * cum / total);
    const auto hi = static_cast<std::uint32_t>(r * (cum + freq) / total);
    code_ -= lo;
    range_ = hi - lo;
    while (range_ < kTop) {
        code_ = (code_ << 8) | next();
        range_ <<= 8;
    }
}

}  // namespace teso

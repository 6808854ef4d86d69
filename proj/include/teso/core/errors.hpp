// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace teso {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// Malformed text or binary input file. Carries the line (text) or byte
/// offset (binary) where parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " (at " + std::to_string(position) + ")"), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Container-level corruption: bad magic, truncated payload, section overrun.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Entropy-coded stream ran out of bytes or decoded to an impossible state.
class StreamError : public Error {
public:
    using Error::Error;
};

}  // namespace teso

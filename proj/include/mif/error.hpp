// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mif {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DegenerateTransform : public Error {
public:
    using Error::Error;
};

class ZeroNorm : public Error {
public:
    using Error::Error;
};

class SingularInnovation : public Error {
public:
    using Error::Error;
};

class SingularHessian : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class EmptyPatch : public Error {
public:
    using Error::Error;
};

class EmptyGroundTruth : public Error {
public:
    using Error::Error;
};

class OutOfOrderFrame : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
          path_(path),
          line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

}  // namespace mif

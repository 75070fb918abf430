#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace travel {

// Base for everything this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user-supplied data (CSV contents, flag values). CLI exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

class DuplicateNodeId : public InputError {
public:
    DuplicateNodeId(std::size_t record_index, long long id);
    std::size_t record_index;
};

class UnknownEndpoint : public InputError {
public:
    UnknownEndpoint(std::size_t record_index, long long id);
    std::size_t record_index;
};

class SelfLoop : public InputError {
public:
    explicit SelfLoop(std::size_t record_index);
    std::size_t record_index;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class EmptyGraph : public Error {
public:
    EmptyGraph() : Error("graph has no nodes") {}
};

class DegeneratePoint : public Error {
public:
    using Error::Error;
};

class OutOfRangeAngle : public Error {
public:
    using Error::Error;
};

class BadRatios : public InputError {
public:
    using InputError::InputError;
};

class BadSpec : public InputError {
public:
    using InputError::InputError;
};

// Numeric failure (NaN/Inf, divergence). CLI exit code 3.
class NumericError : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class UndefinedAuc : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class VersionMismatch : public IoError {
public:
    VersionMismatch(unsigned found, unsigned expected);
};

class CorruptFile : public IoError {
public:
    using IoError::IoError;
};

}  // namespace travel

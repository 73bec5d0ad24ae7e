#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace classilist {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Class, bin or cell index outside its valid range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// HistogramSpec that violates its invariants.
class SpecError : public Error {
public:
    using Error::Error;
};

/// Unknown sample id.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Non-positive or wrongly sized reweighting vector.
class WeightError : public Error {
public:
    using Error::Error;
};

/// An operation that needs at least one sample got none.
class EmptySelectionError : public Error {
public:
    using Error::Error;
};

/// Score row whose entries are all zero.
class DegenerateRowError : public Error {
public:
    using Error::Error;
};

/// Filesystem or stream failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// One located problem in an input file. line == 0 means "no line applies".
struct Issue {
    std::string file;
    std::size_t line = 0;
    std::string message;

    std::string to_string() const;
};

/// Raised when an input cannot be turned into a valid Dataset. Carries every
/// problem found, never just the first.
class LoadError : public Error {
public:
    explicit LoadError(std::vector<Issue> issues);

    const std::vector<Issue>& issues() const noexcept { return issues_; }

private:
    std::vector<Issue> issues_;
};

}  // namespace classilist

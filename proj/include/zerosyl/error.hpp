#pragma once

#include <stdexcept>
#include <string>

namespace zerosyl {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad magic, unsupported version, unparsable text record.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Payload shorter (or longer) than its header declares.
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// Input violates a documented invariant (non-finite values, size mismatch, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Metric is undefined for the given input (e.g. no reference boundaries).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// The two root branches of the centroid dendrogram have equal size.
class TieError : public Error {
public:
    using Error::Error;
};

} // namespace zerosyl

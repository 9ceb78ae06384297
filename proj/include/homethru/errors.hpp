#pragma once

#include <stdexcept>
#include <string>

namespace homethru {

// Base for every error raised by the library. Subclasses name the failure
// class so callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed wire data (snapshot JSON, unexpected frame type).
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Connection refused, reset, or otherwise broken below the protocol.
class TransportError : public Error {
public:
    using Error::Error;
};

// The stream ended before enough of the test ran to trust the result.
class IncompleteTestError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class StorageError : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

// A test could not obtain the agent's test slot in time.
class BusyError : public Error {
public:
    using Error::Error;
};

class StartupError : public Error {
public:
    using Error::Error;
};

}  // namespace homethru

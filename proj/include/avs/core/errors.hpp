#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace avs {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input rejected by a validation rule. `field()` names the offending field.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// Illegal device state-machine transition.
class StateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class CodecError : public Error {
public:
    using Error::Error;
};

class DiskFullError : public Error {
public:
    using Error::Error;
};

class SealedError : public Error {
public:
    using Error::Error;
};

class BatteryExhaustedError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

/// Finalization found items whose stored ciphertext no longer matches the
/// manifest checksum.
class FinalizeError : public Error {
public:
    explicit FinalizeError(std::vector<std::string> bad_keys)
        : Error("finalize: " + std::to_string(bad_keys.size()) + " item(s) failed checksum verification"),
          bad_keys_(std::move(bad_keys)) {}
    const std::vector<std::string>& bad_keys() const noexcept { return bad_keys_; }

private:
    std::vector<std::string> bad_keys_;
};

/// A second put to a write-once key carried different bytes.
class WriteOnceViolation : public Error {
public:
    using Error::Error;
};

class QueryError : public Error {
public:
    using Error::Error;
};

}  // namespace avs

#pragma once

#include <stdexcept>
#include <string>

namespace coldsan {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorKind { config, data, numeric, io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};
struct IndexError : Error {
    explicit IndexError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};
struct ConsistencyError : Error {
    explicit ConsistencyError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error(ErrorKind::data, w) {}
};
struct StructureError : Error {
    explicit StructureError(const std::string& w) : Error(ErrorKind::data, w) {}
};
struct DataError : Error {
    explicit DataError(const std::string& w) : Error(ErrorKind::data, w) {}
};
struct InsufficientDataError : Error {
    explicit InsufficientDataError(const std::string& w) : Error(ErrorKind::data, w) {}
};
struct LookupError : Error {
    explicit LookupError(const std::string& w) : Error(ErrorKind::data, w) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

}  // namespace coldsan

#ifndef MABLE_ERROR_HPP
#define MABLE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mable {

// Exit-code classes used by the command-line tool.
enum class ErrorKind { usage = 1, data = 2, numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

// Argument outside an operation's domain (index, abscissa, configuration).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

// The data cannot support the requested fit (empty group, zero variance, ...).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

// Numerical failure: overflow, singular Jacobian, quadrature disagreement.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace mable

#endif  // MABLE_ERROR_HPP

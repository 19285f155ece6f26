#ifndef PROXCLUST_ERROR_HPP
#define PROXCLUST_ERROR_HPP

#include <stdexcept>
#include <string>

namespace proxclust {

/// Bad input: malformed data, violated preconditions, invalid configuration.
/// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A well-formed request that could not be carried out (all centers pruned,
/// an empty mapped cluster, I/O failure). The CLI maps this to exit code 2.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw ValidationError(message);
    }
}

} // namespace detail

} // namespace proxclust

#endif

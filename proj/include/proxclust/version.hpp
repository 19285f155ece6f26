#ifndef PROXCLUST_VERSION_HPP
#define PROXCLUST_VERSION_HPP

namespace proxclust {

inline constexpr const char* kVersion = "0.1.0";

} // namespace proxclust

#endif

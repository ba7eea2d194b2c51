#ifndef UDN_VERSION_HPP
#define UDN_VERSION_HPP

namespace udn {

inline constexpr const char* kVersion = "0.1.0";

} // namespace udn

#endif

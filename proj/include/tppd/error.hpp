#pragma once

#include <stdexcept>
#include <string>

namespace tppd {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond)
        throw error(msg);
}

} // namespace tppd

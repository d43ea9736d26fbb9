#pragma once

#include <stdexcept>
#include <string>

namespace mfd {

// All library failures surface as mfd::Error; messages name the offending node or line.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mfd

#ifndef CROSSAUG_ERRORS_H_
#define CROSSAUG_ERRORS_H_

#include <stdexcept>

namespace crossaug {

// Invalid configuration value or combination of values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crossaug

#endif  // CROSSAUG_ERRORS_H_

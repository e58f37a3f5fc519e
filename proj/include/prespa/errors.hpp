#pragma once
// Error taxonomy: every failure thrown by this library derives from prespa::error
// and carries a stable machine-readable kind string.
#include <stdexcept>
#include <string>
#include <utility>

namespace prespa {

class error : public std::runtime_error {
public:
  error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define PRESPA_ERROR_TYPE(type_name, kind_string)                      \
  class type_name : public error {                                     \
  public:                                                              \
    explicit type_name(const std::string& what)                        \
        : error(kind_string, what) {}                                  \
  }

PRESPA_ERROR_TYPE(invalid_dimension, "invalid-dimension");
PRESPA_ERROR_TYPE(invalid_input, "invalid-input");
PRESPA_ERROR_TYPE(truncation_error, "truncation-error");
PRESPA_ERROR_TYPE(impossible_trajectory, "impossible-trajectory");
PRESPA_ERROR_TYPE(fit_error, "fit-error");
PRESPA_ERROR_TYPE(integration_error, "integration-error");
PRESPA_ERROR_TYPE(non_unique_steady_state, "non-unique-steady-state");
PRESPA_ERROR_TYPE(reconstruction_error, "reconstruction-error");
PRESPA_ERROR_TYPE(leakage_error, "leakage-error");
PRESPA_ERROR_TYPE(undefined_element, "undefined-element");
PRESPA_ERROR_TYPE(optimizer_error, "optimizer-error");

#undef PRESPA_ERROR_TYPE

}  // namespace prespa

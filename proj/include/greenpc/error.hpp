#pragma once

#include <stdexcept>
#include <string>

namespace greenpc {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define GREENPC_ERROR_TYPE(Name, Kind)                                   \
  class Name : public Error {                                           \
  public:                                                               \
    using Error::Error;                                                 \
    const char* kind() const noexcept override { return Kind; }         \
  }

GREENPC_ERROR_TYPE(ConfigError, "configuration");
GREENPC_ERROR_TYPE(UnsupportedStencilError, "unsupported_stencil");
GREENPC_ERROR_TYPE(FactorizationError, "factorization");
GREENPC_ERROR_TYPE(SizeError, "size");
GREENPC_ERROR_TYPE(NumericError, "numeric");
GREENPC_ERROR_TYPE(DivergenceError, "divergence");
GREENPC_ERROR_TYPE(BudgetError, "budget");
GREENPC_ERROR_TYPE(BreakdownError, "breakdown");
GREENPC_ERROR_TYPE(SchemaError, "schema");

#undef GREENPC_ERROR_TYPE

}  // namespace greenpc

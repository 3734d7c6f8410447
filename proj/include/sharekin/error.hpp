#pragma once

#include <stdexcept>
#include <string>

namespace sharekin {

// Error categories. The CLI maps each category onto a process exit code.
enum class ErrorKind { InvalidArgument, Domain, Infeasible, Capacity, Data, NotRecorded, Fit, Config };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) { return {ErrorKind::InvalidArgument, what}; }
inline Error domain_error(const std::string& what) { return {ErrorKind::Domain, what}; }
inline Error infeasible(const std::string& what) { return {ErrorKind::Infeasible, what}; }
inline Error capacity_error(const std::string& what) { return {ErrorKind::Capacity, what}; }
inline Error data_error(const std::string& what) { return {ErrorKind::Data, what}; }
inline Error not_recorded(const std::string& what) { return {ErrorKind::NotRecorded, what}; }
inline Error fit_error(const std::string& what) { return {ErrorKind::Fit, what}; }
inline Error config_error(const std::string& what) { return {ErrorKind::Config, what}; }

}  // namespace sharekin

#pragma once

#include <stdexcept>
#include <string>

namespace mvedoe {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad grain size, n > N, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A file could not be parsed or is inconsistent with its header.
class FormatError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// A pipeline stage needs an artifact that an earlier stage should have written.
class MissingArtifact : public Error {
public:
  explicit MissingArtifact(const std::string& path, const std::string& producer)
      : Error("missing artifact '" + path + "' (run `" + producer + "` first)"),
        path_(path) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

} // namespace mvedoe

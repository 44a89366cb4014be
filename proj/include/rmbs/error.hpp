#pragma once

#include <stdexcept>
#include <string>

namespace rmbs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad field values, out-of-range years, unknown names.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DuplicateDocument : public InvalidInput {
 public:
  explicit DuplicateDocument(const std::string& id)
      : InvalidInput("duplicate document id: " + id), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class UnresolvedEntity : public Error {
 public:
  explicit UnresolvedEntity(const std::string& raw_name)
      : Error("unresolved entity: " + raw_name), raw_name_(raw_name) {}
  const std::string& raw_name() const noexcept { return raw_name_; }

 private:
  std::string raw_name_;
};

/// A numeric routine could not produce a usable result.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration; `field` names the offending key path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A pipeline stage needs an artifact that has not been produced.
class MissingDependency : public Error {
 public:
  explicit MissingDependency(const std::string& path)
      : Error("missing dependency artifact: " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace rmbs

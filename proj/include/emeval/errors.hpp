#pragma once

#include <stdexcept>
#include <string>

namespace emeval {

// Base class for every error this toolkit throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A label was empty (or had no alphabetic content) after normalization.
struct EmptyLabelError : Error {
  using Error::Error;
};

// Malformed input document or record. Messages carry "path:line:" where known.
struct ParseError : Error {
  using Error::Error;
};

// A domain-type invariant was violated; the message names the offending item.
struct InvariantViolation : Error {
  explicit InvariantViolation(const std::string& what, std::string item = {})
      : Error(what), item_(std::move(item)) {}
  const std::string& item() const noexcept { return item_; }

 private:
  std::string item_;
};

// A reply from an LLM endpoint could not be parsed into the expected shape.
struct MalformedReply : Error {
  using Error::Error;
};

// Request failed after the configured number of retries.
struct NetworkError : Error {
  using Error::Error;
};

// No instances to score (empty input, or every instance excluded).
struct EmptyEvaluation : Error {
  using Error::Error;
};

// A sentiment score fell outside the manifest-declared range.
struct OutOfRange : Error {
  using Error::Error;
};

// A configured dataset has no report.
struct MissingDataset : Error {
  explicit MissingDataset(std::string name)
      : Error("missing dataset report: " + name), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// A record lacked a field required by the requested operation.
struct MissingField : Error {
  using Error::Error;
};

// majority_vote called with no votes.
struct NoVotes : Error {
  using Error::Error;
};

// A filter was applied to an empty record list.
struct EmptyInput : Error {
  using Error::Error;
};

// Matrix/vector shapes do not line up.
struct DimMismatch : Error {
  using Error::Error;
};

// Positional encoding requires an even feature dimension.
struct OddDim : Error {
  using Error::Error;
};

// A numeric kernel produced a NaN or infinity.
struct NonFinite : Error {
  using Error::Error;
};

// A token id or wheel index was out of bounds.
struct IndexOutOfRange : Error {
  using Error::Error;
};

}  // namespace emeval

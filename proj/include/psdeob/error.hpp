// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psdeob {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An error tied to a byte offset in decoded source text.
class OffsetError : public Error {
 public:
  OffsetError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UndecodableInput : public Error {
 public:
  using Error::Error;
};

class LexError : public OffsetError {
 public:
  using OffsetError::OffsetError;
};

class ParseError : public OffsetError {
 public:
  using OffsetError::OffsetError;
};

// Folding failures. The evaluator turns these into Unknown values; they only
// escape from the eval_* primitives.
class EvalError : public Error {
 public:
  using Error::Error;
};
class FormatIndexError : public EvalError {
 public:
  using EvalError::EvalError;
};
class FormatSyntaxError : public EvalError {
 public:
  using EvalError::EvalError;
};
class SplitSeparatorError : public EvalError {
 public:
  using EvalError::EvalError;
};
class CharRangeError : public EvalError {
 public:
  using EvalError::EvalError;
};

// LLM transport and prompt construction.
class PromptTooLarge : public Error {
 public:
  PromptTooLarge(std::size_t size, std::size_t budget)
      : Error("prompt of " + std::to_string(size) + " characters exceeds budget of " +
              std::to_string(budget)),
        size_(size),
        budget_(budget) {}
  std::size_t size() const noexcept { return size_; }
  std::size_t budget() const noexcept { return budget_; }

 private:
  std::size_t size_;
  std::size_t budget_;
};

class LlmError : public Error {
 public:
  using Error::Error;
};
class TransportError : public LlmError {
 public:
  using LlmError::LlmError;
};
class AuthError : public LlmError {
 public:
  using LlmError::LlmError;
};
class RateLimited : public LlmError {
 public:
  using LlmError::LlmError;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Corpus / ground truth handling.
class TruthFormatError : public Error {
 public:
  TruthFormatError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};
class DuplicateSampleId : public Error {
 public:
  using Error::Error;
};
class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

}  // namespace psdeob

#pragma once

#include <stdexcept>
#include <string>

namespace qpa {

// Base class for every error this library raises on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input bytes are not valid UTF-8.
struct DecodeError : Error {
  explicit DecodeError(std::size_t byte_offset)
      : Error("invalid UTF-8 at byte offset " + std::to_string(byte_offset)),
        offset(byte_offset) {}
  std::size_t offset;
};

// Structurally unparseable subtitle input; carries the 1-based line number.
struct FormatError : Error {
  FormatError(int line_no, const std::string& what_happened)
      : Error("line " + std::to_string(line_no) + ": " + what_happened),
        line(line_no) {}
  int line;
};

struct EmptyTranscript : Error {
  EmptyTranscript() : Error("transcript contains zero cues") {}
};

struct EmptyGold : Error {
  EmptyGold() : Error("gold answer is empty (corrupted dataset record)") {}
};

struct GroupTooSmall : Error {
  explicit GroupTooSmall(int k)
      : Error("group size must be >= 2, got " + std::to_string(k)) {}
};

struct NonFiniteLogits : Error {
  NonFiniteLogits() : Error("policy produced non-finite logits") {}
};

struct NonFiniteLoss : Error {
  NonFiniteLoss(int step, const std::string& example_id)
      : Error("non-finite loss at step " + std::to_string(step) +
              " (example " + example_id + ")"),
        step(step), example_id(example_id) {}
  int step;
  std::string example_id;
};

struct InsufficientEpisodes : Error {
  InsufficientEpisodes(std::size_t have, std::size_t need)
      : Error("need at least " + std::to_string(need) +
              " episodes for the requested splits, have " + std::to_string(have)) {}
};

struct InsufficientAnswers : Error {
  InsufficientAnswers(std::size_t have, std::size_t need)
      : Error("need at least " + std::to_string(need) +
              " distinct answers to build MCQ items, have " + std::to_string(have)) {}
};

struct EmptyDataset : Error {
  EmptyDataset() : Error("dataset is empty") {}
};

// Invalid configuration values, unknown config keys, unknown sweep dimensions.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace qpa

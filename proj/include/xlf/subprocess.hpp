#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

namespace xlf {

/// Child process with line-oriented pipes on stdin/stdout. stderr is inherited.
/// Move-only; the destructor closes the pipes and reaps the child (killing it
/// if it does not exit promptly).
class Subprocess {
 public:
  /// Spawns argv[0] (PATH lookup). Throws SpawnError.
  static Subprocess spawn(const std::vector<std::string>& argv);

  Subprocess(Subprocess&& other) noexcept;
  Subprocess& operator=(Subprocess&& other) noexcept;
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;
  ~Subprocess();

  /// Writes `line` plus '\n'. Throws TransportError if the pipe is closed.
  void write_line(std::string_view line);

  /// Next line without its '\n'. std::nullopt on EOF. Throws TransportError on timeout.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);

  void close_stdin();

  /// Waits up to `grace` for exit, then kills. Returns the exit status as from waitpid.
  int terminate(std::chrono::milliseconds grace = std::chrono::milliseconds(2000));

  pid_t pid() const noexcept { return pid_; }
  bool running() const noexcept { return pid_ > 0; }

 private:
  Subprocess() = default;
  void release() noexcept;

  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string buffer_;
  bool eof_ = false;
};

/// Splits a command line on whitespace, honouring single and double quotes
/// and backslash escapes. Throws ValidationError on an unterminated quote.
std::vector<std::string> split_command_line(std::string_view command_line);

}  // namespace xlf

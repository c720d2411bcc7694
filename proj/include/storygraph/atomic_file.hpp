#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>

#include "storygraph/error.hpp"

namespace storygraph {

/// Called after the temporary file is complete and synced, just before it is
/// renamed over the target. Tests use it to simulate a crash at that point.
using BeforeRenameHook = std::function<void(const std::filesystem::path& temp, const std::filesystem::path& target)>;

namespace detail {

[[noreturn]] inline void io_failure(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorCode::IOFailure, path.string(), what + " " + path.string() + ": " + std::strerror(errno));
}

inline void fsync_directory(const std::filesystem::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace detail

/// Replaces `target` with `content` so readers see either the old or the new
/// file, never a mix: write a sibling temp file, fsync, rename, fsync the
/// directory.
inline void write_file_atomic(const std::filesystem::path& target, std::string_view content,
                              const BeforeRenameHook& before_rename = {}) {
  static std::atomic<unsigned> counter{0};
  const auto temp = target.parent_path() / (target.filename().string() + ".tmp-" + std::to_string(::getpid()) + "-" +
                                            std::to_string(counter++));
  int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) detail::io_failure(temp, "cannot create");
  std::size_t written = 0;
  while (written < content.size()) {
    ssize_t n = ::write(fd, content.data() + written, content.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      ::unlink(temp.c_str());
      detail::io_failure(temp, "cannot write");
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    ::unlink(temp.c_str());
    detail::io_failure(temp, "cannot sync");
  }
  if (before_rename) before_rename(temp, target);
  if (::rename(temp.c_str(), target.c_str()) != 0) {
    ::unlink(temp.c_str());
    detail::io_failure(target, "cannot replace");
  }
  detail::fsync_directory(target.parent_path().empty() ? "." : target.parent_path());
}

/// Removes temp files left behind by interrupted writes of `target`.
inline void remove_stale_temps(const std::filesystem::path& target) {
  std::error_code ec;
  const auto prefix = target.filename().string() + ".tmp-";
  for (const auto& entry : std::filesystem::directory_iterator(target.parent_path(), ec)) {
    if (entry.path().filename().string().starts_with(prefix)) std::filesystem::remove(entry.path(), ec);
  }
}

}  // namespace storygraph

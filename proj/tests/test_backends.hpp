#pragma once

// Test doubles layered over the scripted backend.

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "storygraph/scripted_backend.hpp"

namespace storygraph::testing {

/// Fails every call to `failing_task` (or every call when empty).
class FailingBackend : public ScriptedBackend {
 public:
  explicit FailingBackend(std::string failing_task = {}, std::string message = "simulated outage")
      : ScriptedBackend(1), failing_task_(std::move(failing_task)), message_(std::move(message)) {}

  BackendResponse complete(const BackendRequest& request) const override {
    if (failing_task_.empty() || request.task == failing_task_) {
      throw Error(ErrorCode::BackendFailure, request.task, message_);
    }
    return ScriptedBackend::complete(request);
  }

 private:
  std::string failing_task_;
  std::string message_;
};

/// Fails the Nth call (1-based) of a given task, counting across threads.
class FailOnNthCall : public ScriptedBackend {
 public:
  FailOnNthCall(std::string task_name, int n, std::uint64_t seed = 3)
      : ScriptedBackend(seed), task_(std::move(task_name)), n_(n) {}

  BackendResponse complete(const BackendRequest& request) const override {
    if (request.task == task_ && ++calls_ == n_) {
      throw Error(ErrorCode::BackendFailure, request.task, "injected failure on call " + std::to_string(n_));
    }
    return ScriptedBackend::complete(request);
  }

 private:
  std::string task_;
  int n_;
  mutable std::atomic<int> calls_{0};
};

/// Returns garbage for the first `bad_answers` reason calls, then behaves.
class GarblingBackend : public ScriptedBackend {
 public:
  explicit GarblingBackend(int bad_answers) : ScriptedBackend(2), bad_answers_(bad_answers) {}

  BackendResponse complete(const BackendRequest& request) const override {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    if (request.task == task::reason && bad_answers_ > 0) {
      --bad_answers_;
      return {"Sure! Here are the nodes:\n1. The beginning\n2. The end", {}, {}};
    }
    return ScriptedBackend::complete(request);
  }

  std::vector<BackendRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  mutable std::mutex mutex_;
  mutable int bad_answers_;
  mutable std::vector<BackendRequest> requests_;
};

/// Answers every text task with a fixed string.
class FixedTextBackend : public ScriptedBackend {
 public:
  explicit FixedTextBackend(std::string answer) : ScriptedBackend(0), answer_(std::move(answer)) {}
  BackendResponse complete(const BackendRequest&) const override { return {answer_, {}, {}}; }

 private:
  std::string answer_;
};

}  // namespace storygraph::testing

#pragma once

#include <set>
#include <string>
#include <string_view>

#include "storygraph/graph.hpp"

namespace storygraph {

enum class Capability { Text, Audio, Image, Video };

inline Capability capability_for(MediaKind kind) {
  switch (kind) {
    case MediaKind::Audio: return Capability::Audio;
    case MediaKind::Image: return Capability::Image;
    case MediaKind::Video: return Capability::Video;
  }
  return Capability::Text;
}

/// Task names carried in the request envelope.
namespace task {
inline constexpr std::string_view generate = "generate";
inline constexpr std::string_view reason = "reason";
inline constexpr std::string_view diagram_check = "diagram_check";
inline constexpr std::string_view edit = "edit";
inline constexpr std::string_view route = "route";
inline constexpr std::string_view audio = "audio";
inline constexpr std::string_view image = "image";
inline constexpr std::string_view video = "video";
}  // namespace task

/// One call to a generative model. `prompt` is the full instruction text a
/// language model would see; `inputs` carries the same content structured,
/// for backends that do not need to read prose.
struct BackendRequest {
  std::string task;
  std::string prompt;
  ordered_json inputs = ordered_json::object();
};

/// Text for text tasks; raw bytes plus metadata (duration_s, ext, ...) for media.
struct BackendResponse {
  std::string text;
  std::string payload;
  ordered_json metadata = ordered_json::object();
};

/// Contract shared by the scripted stand-in and remote model endpoints.
/// Implementations must be callable concurrently and report failures by
/// throwing Error(ErrorCode::BackendFailure).
class GenerativeBackend {
 public:
  virtual ~GenerativeBackend() = default;
  virtual std::string name() const = 0;
  virtual std::set<Capability> capabilities() const = 0;
  virtual BackendResponse complete(const BackendRequest& request) const = 0;

  bool supports(Capability capability) const { return capabilities().contains(capability); }
};

}  // namespace storygraph

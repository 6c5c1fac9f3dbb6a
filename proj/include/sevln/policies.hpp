#pragma once

// Scripted policy backends: deterministic stand-ins for a language model that
// answer every call site (scene description, landmarks, decisions,
// corrections) from the episode's reference route and the request text.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sevln/backend.hpp"
#include "sevln/nav_env.hpp"

namespace sevln {

enum class Policy {
    oracle,       // always takes the next reference-route node
    stop,         // stops immediately
    two_phase,    // follows the route only when a retrieved experience shares a landmark
    random_walk,  // seeded uniform choice among candidates, sometimes stopping
};

Policy parse_policy(std::string_view name);
std::string_view to_string(Policy p);

std::unique_ptr<ModelBackend> make_policy_backend(Policy policy, const Episode& episode,
                                                  std::uint64_t seed);

namespace prompt_scan {

/// Body of a "=== NAME ===" section, up to the next section header.
std::optional<std::string> section(const std::string& prompt, std::string_view name);
std::optional<NodeId> current_node(const std::string& prompt);
std::vector<NodeId> candidates(const std::string& prompt);
/// Landmark lists of every rendered experience in the prompt.
std::vector<std::vector<std::string>> experience_landmarks(const std::string& prompt);
/// Captions from a scene-description request.
std::vector<std::string> view_captions(const std::string& request);

}  // namespace prompt_scan

}  // namespace sevln

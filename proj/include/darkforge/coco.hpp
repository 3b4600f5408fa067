#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace darkforge {

struct AnnotationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rewrites image file_name fields through the map; every other field is
/// copied verbatim (the degradation is pixel-wise and geometry-preserving).
inline nlohmann::json passthrough_annotations(const nlohmann::json& doc,
                                              const std::map<std::string, std::string>& filename_map) {
    nlohmann::json out = doc;
    std::string missing;
    if (out.contains("images")) {
        for (auto& img : out["images"]) {
            if (!img.contains("file_name")) continue;
            const std::string name = img["file_name"].get<std::string>();
            auto it = filename_map.find(name);
            if (it == filename_map.end()) {
                if (!missing.empty()) missing += ", ";
                missing += name;
                continue;
            }
            img["file_name"] = it->second;
        }
    }
    if (!missing.empty())
        throw AnnotationError("annotations reference images missing from the map: " + missing);
    return out;
}

}  // namespace darkforge

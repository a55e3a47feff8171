#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smsge/matrix.hpp"

namespace smsge {

// Little-endian binary tensor container: magic bytes, u32 format version,
// length-prefixed JSON header, then named 2-D float64 tensors, each with a
// dimension header. Used for checkpoints, feature files and probe files.
inline constexpr std::uint32_t kArchiveVersion = 1;

void write_archive(const std::string& path, const std::string& magic,
                   const nlohmann::json& header,
                   const std::vector<std::pair<std::string, const Matrix*>>& tensors);

struct Archive {
    nlohmann::json header;
    std::vector<std::pair<std::string, Matrix>> tensors;

    const Matrix& find(const std::string& name) const;
};

// Throws on wrong magic, unsupported version, or truncation.
Archive read_archive(const std::string& path, const std::string& magic);

}  // namespace smsge

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stls/geom.hpp"

namespace stls {

enum class StlFormat { binary, ascii };

struct ParseStats {
    size_t degenerate_dropped = 0;
};

// Auto-detects binary vs ASCII. Degenerate facets (area < 1e-12 mm^2) are
// dropped and counted; stored normals are recomputed from winding.
Mesh parse_stl(const std::vector<uint8_t>& bytes, ParseStats* stats = nullptr);

std::vector<uint8_t> write_stl(const Mesh& mesh, StlFormat format = StlFormat::binary);

Mesh load_stl_file(const std::string& path, ParseStats* stats = nullptr);
void save_stl_file(const Mesh& mesh, const std::string& path,
                   StlFormat format = StlFormat::binary);

}  // namespace stls

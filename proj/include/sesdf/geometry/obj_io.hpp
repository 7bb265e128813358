#pragma once

#include <filesystem>

#include "sesdf/geometry/mesh.hpp"

namespace sesdf {

// OBJ subset: `v x y z` and `f i j k` (1-based). Other records are ignored;
// `f a/b/c` tokens keep the position index. Degenerate faces are dropped.
TriangleMesh read_obj(const std::filesystem::path& path);
void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

}  // namespace sesdf

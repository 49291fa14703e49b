#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "norm/mesh/mesh.hpp"

namespace norm {

enum class MeshFormat { OFF, OBJ, MSHJSON };

// Infers the format from the extension (.off, .obj, .json/.mshjson).
std::optional<MeshFormat> format_from_path(const std::filesystem::path& path);

Mesh load_mesh(const std::filesystem::path& path, MeshFormat format);
Mesh load_mesh(const std::filesystem::path& path);

Mesh parse_off(std::string_view text);
Mesh parse_obj(std::string_view text);
Mesh parse_mshjson(std::string_view text);

std::string to_off(const Mesh& mesh);
std::string to_mshjson(const Mesh& mesh);

void save_mesh(const Mesh& mesh, const std::filesystem::path& path, MeshFormat format);

// Legacy ASCII VTK unstructured grid with one nodal field (rows = vertices).
// One channel is written as SCALARS, two or three as VECTORS (z padded with
// 0), anything else as one SCALARS block per channel.
std::string to_vtk(const Mesh& mesh, const Matrix& field, const std::string& name = "field");

}  // namespace norm

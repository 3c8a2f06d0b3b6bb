#pragma once

// JSON serialization of programs and solutions. Doubles are written with
// round-trip precision, so finite values survive a write/read cycle exactly.

#include "dpconic/conic.hpp"

#include <json.hpp>

#include <filesystem>

namespace dpconic {

nlohmann::json program_to_json(const ConicProgram& program);
ConicProgram program_from_json(const nlohmann::json& doc);

nlohmann::json solution_to_json(const Solution& solution);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& array);

ConicProgram load_program(const std::filesystem::path& path);
void save_program(const ConicProgram& program, const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace dpconic

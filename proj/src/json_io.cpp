#include "dpconic/json_io.hpp"

#include "dpconic/errors.hpp"

#include <fstream>

namespace dpconic {

using nlohmann::json;

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const json& array) {
    if (!array.is_array()) throw ValidationError("expected a JSON array of numbers");
    Vector v(static_cast<Index>(array.size()));
    for (std::size_t i = 0; i < array.size(); ++i) v(static_cast<Index>(i)) = array[i].get<double>();
    return v;
}

json program_to_json(const ConicProgram& program) {
    json doc;
    doc["m"] = program.rows();
    doc["n"] = program.cols();
    json A = json::array();
    for (Index i = 0; i < program.A.rows(); ++i)
        for (Index j = 0; j < program.A.cols(); ++j) A.push_back(program.A(i, j));
    doc["A"] = std::move(A);
    doc["b"] = vector_to_json(program.b);
    doc["c"] = vector_to_json(program.c);
    json cones = json::array();
    for (const auto& block : program.cones.blocks())
        cones.push_back({{"kind", std::string(to_string(block.kind))}, {"dim", block.dim}});
    doc["cones"] = std::move(cones);
    if (!program.variable_names.empty()) doc["variable_names"] = program.variable_names;
    return doc;
}

ConicProgram program_from_json(const json& doc) {
    try {
        const Index m = doc.at("m").get<Index>();
        const Index n = doc.at("n").get<Index>();
        const auto& A = doc.at("A");
        if (static_cast<Index>(A.size()) != m * n)
            throw ValidationError("program JSON: A has " + std::to_string(A.size()) + " entries, expected m*n");
        ConicProgram program;
        program.A.resize(m, n);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < n; ++j) program.A(i, j) = A[static_cast<std::size_t>(i * n + j)].get<double>();
        program.b = vector_from_json(doc.at("b"));
        program.c = vector_from_json(doc.at("c"));
        for (const auto& block : doc.at("cones"))
            program.cones.push_back({cone_kind_from_string(block.at("kind").get<std::string>()),
                                     block.at("dim").get<Index>()});
        if (doc.contains("variable_names"))
            program.variable_names = doc["variable_names"].get<std::vector<std::string>>();
        return program;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("program JSON: ") + e.what());
    }
}

json solution_to_json(const Solution& solution) {
    return {{"status", std::string(to_string(solution.status))},
            {"objective", solution.objective},
            {"iterations", solution.iterations},
            {"reduced_accuracy", solution.reduced_accuracy},
            {"x", vector_to_json(solution.x)},
            {"y", vector_to_json(solution.y)},
            {"residuals",
             {{"primal", solution.residuals.primal},
              {"dual", solution.residuals.dual},
              {"gap", solution.residuals.gap}}}};
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_json_file(const json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

ConicProgram load_program(const std::filesystem::path& path) { return program_from_json(read_json_file(path)); }

void save_program(const ConicProgram& program, const std::filesystem::path& path) {
    write_json_file(program_to_json(program), path);
}

}  // namespace dpconic

#include "tsrules/taxonomy.hpp"

#include <algorithm>
#include <charconv>

#include "tsrules/error.hpp"

namespace tsrules {

bool Taxonomy::has_category(const std::string& name) const {
    return std::any_of(categories.begin(), categories.end(),
                       [&](const Category& c) { return c.name == name; });
}

nlohmann::json to_json(const Taxonomy& t) {
    nlohmann::json categories = nlohmann::json::array();
    for (const auto& c : t.categories) {
        categories.push_back({{"name", c.name}, {"description", c.description}});
    }
    nlohmann::json assignment = nlohmann::json::object();
    for (const auto& [index, name] : t.assignment) assignment[std::to_string(index)] = name;
    return {{"categories", categories}, {"assignment", assignment}};
}

Taxonomy taxonomy_from_json(const nlohmann::json& j) {
    const auto bad = [](const std::string& what) -> Error {
        return Error(ErrorCode::MalformedResponse, "taxonomy: " + what);
    };
    if (!j.is_object()) throw bad("not an object");
    Taxonomy t;
    const auto categories = j.find("categories");
    if (categories == j.end() || !categories->is_array()) throw bad("missing 'categories' array");
    for (const auto& c : *categories) {
        if (!c.is_object() || !c.contains("name") || !c["name"].is_string()) throw bad("category without name");
        Category cat{c["name"].get<std::string>(), ""};
        if (cat.name.empty()) throw bad("empty category name");
        if (const auto d = c.find("description"); d != c.end() && d->is_string()) {
            cat.description = d->get<std::string>();
        }
        t.categories.push_back(std::move(cat));
    }
    const auto assignment = j.find("assignment");
    if (assignment == j.end() || !assignment->is_object()) throw bad("missing 'assignment' object");
    for (const auto& [key, value] : assignment->items()) {
        std::size_t index = 0;
        const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
        if (ec != std::errc() || ptr != key.data() + key.size()) throw bad("clause index '" + key + "'");
        if (!value.is_string()) throw bad("assignment value for clause " + key);
        t.assignment[index] = value.get<std::string>();
    }
    return t;
}

}  // namespace tsrules

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tsrules {

struct Category {
    std::string name;
    std::string description;

    friend bool operator==(const Category&, const Category&) = default;
};

// Category names for the clauses of one rule, by clause index.
struct Taxonomy {
    std::vector<Category> categories;
    std::map<std::size_t, std::string> assignment;

    bool has_category(const std::string& name) const;

    friend bool operator==(const Taxonomy&, const Taxonomy&) = default;
};

// {"categories":[{"name","description"}], "assignment":{"0": name, ...}}
nlohmann::json to_json(const Taxonomy& t);
// Throws Error(MalformedResponse) on shape errors.
Taxonomy taxonomy_from_json(const nlohmann::json& j);

}  // namespace tsrules
